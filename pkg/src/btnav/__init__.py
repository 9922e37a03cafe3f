"""Cell-of-origin indoor tracking over a Bluetooth reader mesh bridged to Wi-Fi."""

from .core import (
    AssetRegistry,
    BtAddress,
    LatencyConfig,
    LookupTable,
    MobilityPath,
    Position,
    RangeModel,
    distance,
    in_range,
    lookup_location,
    parse_bt_address,
    position_at,
    resolve_target,
)
from .engine import Simulator, Trace, positioning_error, run
from .report import compute_metrics, read_trace, write_trace
from .scenario import Scenario, parse_scenario, render_scenario

__version__ = "0.1.0"

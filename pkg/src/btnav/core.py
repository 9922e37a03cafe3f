"""Domain types shared by the whole tracking model.

Geometry is planar, in meters. Radio coverage is an ideal disc whose
boundary counts as inside.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

NodeId = str

_ADDRESS_RE = re.compile(r"^[0-9A-Fa-f]{2}(?::[0-9A-Fa-f]{2}){5}$")
_MAX_ADDRESS = (1 << 48) - 1


class MalformedAddress(ValueError):
    pass


class UnknownAccessPoint(LookupError):
    pass


class UnknownAsset(LookupError):
    pass


@dataclass(frozen=True, order=True)
class BtAddress:
    """48-bit Bluetooth device address."""

    value: int

    def __post_init__(self):
        if not 0 <= self.value <= _MAX_ADDRESS:
            raise MalformedAddress(f"address out of 48-bit range: {self.value:#x}")

    def __str__(self) -> str:
        raw = f"{self.value:012X}"
        return ":".join(raw[i:i + 2] for i in range(0, 12, 2))

    @classmethod
    def parse(cls, text: str) -> "BtAddress":
        return parse_bt_address(text)


def parse_bt_address(text: str) -> BtAddress:
    if not isinstance(text, str) or not _ADDRESS_RE.match(text):
        raise MalformedAddress(f"not a Bluetooth address: {text!r}")
    return BtAddress(int(text.replace(":", ""), 16))


def looks_like_address(text: str) -> bool:
    return bool(_ADDRESS_RE.match(text))


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite position ({self.x}, {self.y})")


def distance(a: Position, b: Position) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def in_range(range_m: float, a: Position, b: Position) -> bool:
    if range_m <= 0:
        raise ValueError("range must be positive")
    return distance(a, b) <= range_m


@dataclass(frozen=True)
class MobilityPath:
    """Piecewise-linear trajectory through timed waypoints.

    Before the first waypoint the device sits at the first position, after
    the last one it stays at the last position.
    """

    waypoints: tuple[tuple[float, Position], ...]

    def __post_init__(self):
        wps = tuple((float(t), p) for t, p in self.waypoints)
        object.__setattr__(self, "waypoints", wps)
        if not wps:
            raise ValueError("a mobility path needs at least one waypoint")
        times = [t for t, _ in wps]
        if any(not math.isfinite(t) for t in times):
            raise ValueError("waypoint times must be finite")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("waypoint times must be strictly increasing")

    @classmethod
    def stationary(cls, position: Position) -> "MobilityPath":
        return cls(((0.0, position),))

    def position_at(self, t: float) -> Position:
        return position_at(self, t)

    def max_speed(self) -> float:
        speeds = [
            distance(p0, p1) / (t1 - t0)
            for (t0, p0), (t1, p1) in zip(self.waypoints, self.waypoints[1:])
        ]
        return max(speeds, default=0.0)


def position_at(path: MobilityPath, t: float) -> Position:
    wps = path.waypoints
    if t <= wps[0][0]:
        return wps[0][1]
    if t >= wps[-1][0]:
        return wps[-1][1]
    for (t0, p0), (t1, p1) in zip(wps, wps[1:]):
        if t0 <= t <= t1:
            frac = (t - t0) / (t1 - t0)
            return Position(p0.x + frac * (p1.x - p0.x), p0.y + frac * (p1.y - p0.y))
    raise AssertionError("unreachable: t inside waypoint span")


@dataclass(frozen=True)
class RangeModel:
    bt_range_m: float = 10.0
    wifi_range_m: float = 30.0

    def __post_init__(self):
        if not (self.bt_range_m > 0 and self.wifi_range_m > 0):
            raise ValueError("radio ranges must be strictly positive")


@dataclass(frozen=True)
class LatencyConfig:
    """Link and protocol timing, all in simulated seconds."""

    bt_hop_latency: float = 0.010
    bt_connect_latency: float = 1.0
    wifi_latency: float = 0.005
    ethernet_latency: float = 0.001
    refresh_interval: float = 5.0
    locate_timeout: float = 3.0
    track_ttl: float = 60.0

    def __post_init__(self):
        for name, value in vars(self).items():
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be strictly positive, got {value}")


@dataclass(frozen=True)
class LookupTable:
    """Reader access-point address to physical location label."""

    entries: Mapping[BtAddress, str] = field(default_factory=dict)

    def __post_init__(self):
        for addr, label in self.entries.items():
            if not label:
                raise ValueError(f"empty location label for {addr}")

    @classmethod
    def from_rows(cls, rows: Iterable[tuple[BtAddress, str]]) -> "LookupTable":
        entries: dict[BtAddress, str] = {}
        for addr, label in rows:
            if addr in entries:
                raise ValueError(f"duplicate access point {addr}")
            entries[addr] = label
        return cls(entries)

    def __len__(self):
        return len(self.entries)


def lookup_location(table: LookupTable, ap: BtAddress) -> str:
    try:
        return table.entries[ap]
    except KeyError:
        raise UnknownAccessPoint(str(ap)) from None


@dataclass(frozen=True)
class Asset:
    name: str
    another_info: str = ""


@dataclass(frozen=True)
class AssetRegistry:
    assets: Mapping[BtAddress, Asset] = field(default_factory=dict)

    def __post_init__(self):
        names = [a.name for a in self.assets.values()]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise ValueError(f"duplicate asset names: {', '.join(dupes)}")

    def by_name(self, name: str) -> BtAddress | None:
        for addr, asset in self.assets.items():
            if asset.name == name:
                return addr
        return None


def resolve_target(reg: AssetRegistry, query: str) -> BtAddress:
    """Resolve a name or address query to a registered device address."""
    if looks_like_address(query):
        addr = parse_bt_address(query)
        if addr in reg.assets:
            return addr
    found = reg.by_name(query)
    if found is None:
        raise UnknownAsset(query)
    return found

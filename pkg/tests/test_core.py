import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from btnav.core import (
    Asset,
    AssetRegistry,
    BtAddress,
    LatencyConfig,
    LookupTable,
    MalformedAddress,
    MobilityPath,
    Position,
    RangeModel,
    UnknownAccessPoint,
    UnknownAsset,
    distance,
    in_range,
    lookup_location,
    parse_bt_address,
    position_at,
    resolve_target,
)

from .scenarios import TABLE1
from .oracles import interp_position


def test_parse_table1_address():
    assert parse_bt_address("00:0C:25:14:67:1E") == BtAddress(0x000C2514671E)


def test_parse_is_case_insensitive():
    addr = parse_bt_address("00:0c:25:14:67:1e")
    assert addr == BtAddress(0x000C2514671E)
    assert str(addr) == "00:0C:25:14:67:1E"


@pytest.mark.parametrize("bad", [
    "00:0C:25", "00:0C:25:14:67:1E:00", "00-0C-25-14-67-1E", "00:0C:25:14:67:1G",
    "0:0C:25:14:67:1E", "", " 00:0C:25:14:67:1E",
])
def test_malformed_addresses(bad):
    with pytest.raises(MalformedAddress):
        parse_bt_address(bad)


def test_address_round_trip_seeded():
    rng = random.Random(2012)
    for _ in range(1000):
        v = rng.getrandbits(48)
        assert parse_bt_address(str(BtAddress(v))).value == v


def test_address_out_of_range():
    with pytest.raises(MalformedAddress):
        BtAddress(1 << 48)


@pytest.mark.parametrize("a, b, expected", [
    ((0, 0), (3, 4), 5.0),
    ((7, 2), (7, 2), 0.0),
    ((-1, 0), (1, 0), 2.0),
])
def test_distance_examples(a, b, expected):
    assert distance(Position(*a), Position(*b)) == expected


coords = st.floats(-1e4, 1e4, allow_nan=False)
points = st.builds(Position, coords, coords)


@given(points, points, points)
def test_triangle_inequality(a, b, c):
    assert distance(a, c) <= distance(a, b) + distance(b, c) + 1e-9


@given(points, points)
def test_distance_symmetric_nonnegative(a, b):
    assert distance(a, b) == distance(b, a) >= 0


def test_in_range_boundary_inclusive():
    assert in_range(10, Position(0, 0), Position(10.0, 0))
    assert not in_range(10, Position(0, 0), Position(10.000001, 0))
    assert in_range(30, Position(0, 0), Position(0, 29))


def test_in_range_rejects_nonpositive_range():
    with pytest.raises(ValueError):
        in_range(0, Position(0, 0), Position(0, 0))


def test_position_rejects_nan():
    with pytest.raises(ValueError):
        Position(math.nan, 0)


def test_position_at_examples():
    path = MobilityPath(((0, Position(0, 0)), (10, Position(10, 0))))
    assert position_at(path, 5) == Position(5, 0)
    assert position_at(path, 15) == Position(10, 0)
    assert position_at(MobilityPath(((2, Position(4, 4)),)), 0) == Position(4, 4)


@pytest.mark.parametrize("waypoints", [(), ((1, Position(0, 0)), (1, Position(1, 1)))])
def test_mobility_path_invariants(waypoints):
    with pytest.raises(ValueError):
        MobilityPath(waypoints)


@st.composite
def paths(draw):
    n = draw(st.integers(1, 6))
    gaps = draw(st.lists(st.floats(0.1, 50), min_size=n, max_size=n))
    times = [sum(gaps[:i + 1]) for i in range(n)]
    pts = draw(st.lists(st.tuples(st.floats(-100, 100), st.floats(-100, 100)), min_size=n, max_size=n))
    return [(t, x, y) for t, (x, y) in zip(times, pts)]


@given(paths(), st.floats(0, 400))
def test_position_at_matches_numpy_interp(wps, t):
    path = MobilityPath(tuple((t0, Position(x, y)) for t0, x, y in wps))
    got = position_at(path, t)
    want = interp_position(wps, t)
    assert got.x == pytest.approx(want[0], abs=1e-9)
    assert got.y == pytest.approx(want[1], abs=1e-9)


@given(paths(), st.floats(0, 400), st.floats(1e-6, 1.0))
def test_position_at_is_speed_bounded(wps, t, eps):
    path = MobilityPath(tuple((t0, Position(x, y)) for t0, x, y in wps))
    moved = distance(position_at(path, t), position_at(path, t + eps))
    assert moved <= path.max_speed() * eps + 1e-9


def test_range_model_defaults_and_validation():
    assert RangeModel() == RangeModel(10.0, 30.0)
    with pytest.raises(ValueError):
        RangeModel(bt_range_m=0)


def test_latency_config_validation():
    assert LatencyConfig().bt_hop_latency == 0.010
    with pytest.raises(ValueError):
        LatencyConfig(locate_timeout=-1)


def test_lookup_table1_rows():
    table = LookupTable.from_rows((parse_bt_address(a), label) for a, label in TABLE1)
    assert lookup_location(table, parse_bt_address("00:82:44:A6:BB:10")) == "Amphitheatre"
    assert lookup_location(table, parse_bt_address("00:86:31:EA:89:22")) == "Canteen"
    key = parse_bt_address("00:86:31:EA:89:22")
    assert lookup_location(table, key) == lookup_location(table, key)


def test_lookup_empty_table():
    with pytest.raises(UnknownAccessPoint):
        lookup_location(LookupTable(), parse_bt_address("00:82:44:A6:BB:10"))


def test_lookup_table_rejects_duplicates_and_empty_labels():
    a = parse_bt_address("00:82:44:A6:BB:10")
    with pytest.raises(ValueError):
        LookupTable.from_rows([(a, "x"), (a, "y")])
    with pytest.raises(ValueError):
        LookupTable({a: ""})


@pytest.fixture
def alice_registry():
    return AssetRegistry({parse_bt_address("00:11:22:33:44:55"): Asset("Alice", "dept=EE")})


def test_resolve_by_name(alice_registry):
    assert resolve_target(alice_registry, "Alice") == parse_bt_address("00:11:22:33:44:55")


def test_resolve_by_address(alice_registry):
    assert resolve_target(alice_registry, "00:11:22:33:44:55") == parse_bt_address("00:11:22:33:44:55")


@pytest.mark.parametrize("query", ["Bob", "00:11:22:33:44:56", "alice"])
def test_resolve_unknown(alice_registry, query):
    with pytest.raises(UnknownAsset):
        resolve_target(alice_registry, query)


def test_registry_names_unique():
    with pytest.raises(ValueError):
        AssetRegistry({BtAddress(1): Asset("A"), BtAddress(2): Asset("A")})

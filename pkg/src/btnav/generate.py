"""Seeded random scenarios for property checks and demos.

Readers are grown outward from the origin so that each new reader lands
within BT range of an earlier mesh node; gateways attach to the mesh the
same way and each gets its own Wi-Fi AP. Targets follow random waypoint
paths over the deployment area. The seed fully determines the result.
"""

from __future__ import annotations

import math
import random

from .core import BtAddress, MobilityPath, Position, RangeModel, distance
from .scenario import InfraNode, MobileSpec, ReaderSpec, RequestSpec, Scenario


def _attach(rng: random.Random, anchors: list[Position], reach: float, spacing: float) -> Position:
    for _ in range(200):
        base = rng.choice(anchors)
        angle = rng.uniform(0, 2 * math.pi)
        r = rng.uniform(0.6 * reach, reach)
        p = Position(round(base.x + r * math.cos(angle), 3), round(base.y + r * math.sin(angle), 3))
        if all(distance(p, q) >= spacing and distance(p, q) > 0 for q in anchors):
            if any(distance(p, q) <= reach for q in anchors):
                return p
    raise RuntimeError("could not place node")


def _waypoint_path(rng, lo: Position, hi: Position, duration: float) -> MobilityPath:
    def point():
        return Position(round(rng.uniform(lo.x, hi.x), 3), round(rng.uniform(lo.y, hi.y), 3))

    t, here = 0.0, point()
    waypoints = [(t, here)]
    while t < duration:
        there = point()
        speed = rng.uniform(0.5, 2.0)
        t = round(t + max(distance(here, there) / speed, 0.5), 6)
        waypoints.append((t, there))
        pause = round(rng.uniform(0, 10), 6)
        if pause > 0:
            t = round(t + pause, 6)
            waypoints.append((t, there))
        here = there
    return MobilityPath(tuple(waypoints))


def random_scenario(
    seed: int,
    max_readers: int = 15,
    max_gateways: int = 3,
    max_targets: int = 5,
    duration: float = 120.0,
    ranges: RangeModel | None = None,
) -> Scenario:
    rng = random.Random(seed)
    ranges = ranges or RangeModel()
    bt = ranges.bt_range_m
    n_readers = rng.randint(1, max_readers)
    n_gateways = rng.randint(1, max_gateways)
    n_targets = rng.randint(1, max_targets)

    used: set[int] = set()

    def address() -> BtAddress:
        while True:
            v = rng.getrandbits(48)
            if v not in used:
                used.add(v)
                return BtAddress(v)

    mesh = [Position(0.0, 0.0)]
    for _ in range(n_readers - 1 + n_gateways):
        mesh.append(_attach(rng, mesh, bt, spacing=0.3 * bt))
    # gateways take random slots so they are not always at the fringe
    gw_slots = set(rng.sample(range(1, len(mesh)), n_gateways)) if len(mesh) > 1 else set()
    readers, gateways = [], []
    for i, pos in enumerate(mesh):
        if i in gw_slots:
            gateways.append(InfraNode(f"G{len(gateways) + 1}", pos))
        else:
            k = len(readers) + 1
            readers.append(ReaderSpec(f"R{k}", address(), pos, f"Zone {k}"))

    wifi_aps = []
    for k, gw in enumerate(gateways, start=1):
        angle = rng.uniform(0, 2 * math.pi)
        r = rng.uniform(1.0, 0.8 * ranges.wifi_range_m)
        wifi_aps.append(InfraNode(f"W{k}", Position(round(gw.position.x + r * math.cos(angle), 3),
                                                    round(gw.position.y + r * math.sin(angle), 3))))

    xs = [p.x for p in mesh]
    ys = [p.y for p in mesh]
    lo = Position(min(xs) - bt, min(ys) - bt)
    hi = Position(max(xs) + bt, max(ys) + bt)

    # the requester stands next to the first reader
    r0 = readers[0].position
    mobiles = [MobileSpec("M0", address(), "Requester", "", MobilityPath.stationary(
        Position(r0.x + 1.0, r0.y)))]
    for k in range(1, n_targets + 1):
        mobiles.append(MobileSpec(f"M{k}", address(), f"Target {k}", f"seed={seed}",
                                  _waypoint_path(rng, lo, hi, duration)))

    requests = []
    for m in mobiles[1:]:
        at = round(rng.uniform(0.5, 20.0), 3)
        query = m.name if rng.random() < 0.5 else str(m.address)
        requests.append(RequestSpec(at, "M0", query))
    requests.sort(key=lambda r: r.at)

    return Scenario(
        server="S1",
        ranges=ranges,
        wifi_aps=tuple(wifi_aps),
        gateways=tuple(gateways),
        readers=tuple(readers),
        mobiles=tuple(mobiles),
        requests=tuple(requests),
    )

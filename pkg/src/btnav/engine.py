"""Deterministic discrete-event simulation of a tracking scenario.

The clock is kept in integer microseconds so that hand-summed latencies
come out exact. Events are ordered by (time, scheduling sequence), which
makes equal-time events FIFO. Every delivered message or timer becomes one
trace record, as does every `Note` a node emits.
"""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field
from typing import Any, Iterator, NamedTuple

from .core import BtAddress, NodeId, distance, parse_bt_address
from .messages import (
    ConnectAttempt,
    ConnectReject,
    Message,
    Note,
    RequestTimer,
    Timer,
    describe,
    format_detail,
    parse_detail,
)
from .nodes import (
    PICONET_CAPACITY,
    GatewayState,
    MobileState,
    NodeContext,
    ReaderState,
    ServerState,
    WifiApState,
    gateway_step,
    mobile_step,
    reader_step,
    server_step,
    wifi_ap_step,
)
from .routing import RouteTable, TopologyGraph, build_adjacency, compute_next_hops
from .scenario import Scenario

log = logging.getLogger(__name__)

US_PER_S = 1_000_000

STEP_FUNCTIONS = {
    MobileState: mobile_step,
    ReaderState: reader_step,
    GatewayState: gateway_step,
    WifiApState: wifi_ap_step,
    ServerState: server_step,
}


class SchedulingInPast(ValueError):
    pass


class LinkError(RuntimeError):
    """A node tried to send over a link that does not exist."""


def to_us(seconds: float) -> int:
    return round(seconds * US_PER_S)


def to_s(us: int) -> float:
    return us / US_PER_S


@dataclass(order=True, frozen=True)
class SimEvent:
    at_us: int
    seq: int
    payload: Any = field(compare=False)

    @property
    def at(self) -> float:
        return to_s(self.at_us)


class EventQueue:
    """Priority queue ordered by (time, scheduling order)."""

    def __init__(self):
        self._heap: list[SimEvent] = []
        self._next_seq = 0
        self.now_us = 0

    @property
    def now(self) -> float:
        return to_s(self.now_us)

    def schedule(self, at: float, payload) -> SimEvent:
        return self.schedule_us(to_us(at), payload)

    def schedule_us(self, at_us: int, payload) -> SimEvent:
        if at_us < self.now_us:
            raise SchedulingInPast(f"event at {to_s(at_us)} s scheduled at {self.now} s")
        event = SimEvent(at_us, self._next_seq, payload)
        self._next_seq += 1
        heapq.heappush(self._heap, event)
        return event

    def peek(self) -> SimEvent | None:
        return self._heap[0] if self._heap else None

    def pop(self) -> SimEvent:
        event = heapq.heappop(self._heap)
        self.now_us = event.at_us
        return event

    def __len__(self):
        return len(self._heap)

    def __iter__(self) -> Iterator[SimEvent]:
        return iter(sorted(self._heap))


class TraceRecord(NamedTuple):
    at: float
    kind: str
    src: NodeId
    dst: NodeId
    detail: str

    @property
    def fields(self) -> dict[str, str]:
        return parse_detail(self.detail)


@dataclass
class Trace:
    records: list[TraceRecord] = field(default_factory=list)

    def add(self, at_us: int, kind: str, src: NodeId, dst: NodeId, detail: str = ""):
        self.records.append(TraceRecord(to_s(at_us), kind, src, dst, detail))

    def of_kind(self, *kinds: str) -> list[TraceRecord]:
        return [r for r in self.records if r.kind in kinds]

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)


@dataclass(frozen=True)
class _Deliver:
    message: Message


@dataclass(frozen=True)
class _ConnectDone:
    attempt: Message


def build_context(scenario: Scenario, graph: TopologyGraph | None = None) -> NodeContext:
    graph = graph or build_adjacency(scenario.placements, scenario.ranges)
    return NodeContext(
        ranges=scenario.ranges,
        latencies=scenario.latencies,
        positions={label: pos for label, (_, pos) in scenario.placements.items()},
        bt_neighbors={n: graph.neighbors(n) for n in graph.nodes},
        readers=tuple(sorted(r.label for r in scenario.readers)),
        mobile_paths={m.address: m.path for m in scenario.mobiles},
        mobile_ids={m.address: m.label for m in scenario.mobiles},
    )


def initial_states(scenario: Scenario, routes: RouteTable) -> dict[NodeId, Any]:
    states: dict[NodeId, Any] = {}
    serving = {g.label: scenario.serving_wifi_ap(g.label) for g in scenario.gateways}
    if scenario.server:
        states[scenario.server] = ServerState(
            id=scenario.server,
            registry=scenario.registry,
            lookup=scenario.lookup_table,
            reader_aps={r.label: r.address for r in scenario.readers},
            wifi_aps=tuple(ap.label for ap in scenario.wifi_aps),
        )
    for ap in scenario.wifi_aps:
        served = tuple(sorted(g for g, w in serving.items() if w == ap.label))
        states[ap.label] = WifiApState(ap.label, scenario.server, served)
    for g in scenario.gateways:
        states[g.label] = GatewayState(g.label, serving[g.label])
    for r in scenario.readers:
        states[r.label] = ReaderState(r.label, r.address, routes.next_hop.get(r.label))
    for m in scenario.mobiles:
        states[m.label] = MobileState(m.label, m.address, m.path)
    return states


class Simulator:
    """Runs one scenario; create a fresh instance per run."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.graph = build_adjacency(scenario.placements, scenario.ranges)
        self.routes = compute_next_hops(self.graph, {g.label for g in scenario.gateways})
        self.ctx = build_context(scenario, self.graph)
        self.states = initial_states(scenario, self.routes)
        self.kinds = scenario.kinds
        self.queue = EventQueue()
        self.trace = Trace()
        self.scheduled = 0
        self.delivered = 0
        self.max_slaves = 0
        lat = scenario.latencies
        self._lat_us = {
            "access": 0,
            "bt": to_us(lat.bt_hop_latency),
            "wifi": to_us(lat.wifi_latency),
            "ethernet": to_us(lat.ethernet_latency),
            "connect": to_us(lat.bt_connect_latency),
        }
        self._loaded = False

    def _load(self):
        s = self.scenario
        for label in sorted(self.kinds):
            kind = self.kinds[label]
            info = {"kind": kind}
            if label in s.placements:
                pos = s.position_of(label)
                info.update(x=f"{pos.x:.3f}", y=f"{pos.y:.3f}")
            if kind == "reader":
                hop = self.routes.next_hop.get(label)
                info.update(next_hop=hop, hops=self.routes.hop_count.get(label))
            self.trace.add(0, "NodeUp", label, label, format_detail(info))
        for req in s.requests:
            timer = RequestTimer(req.target_query, req.name, req.another_info)
            self._push(to_us(req.at), _Deliver(Message(timer, req.source, req.source)))
        self._loaded = True

    def _push(self, at_us: int, item):
        self.queue.schedule_us(at_us, item)
        self.scheduled += 1

    def link(self, src: NodeId, dst: NodeId) -> str:
        a, b = self.kinds[src], self.kinds[dst]
        pair = {a, b}
        if pair == {"mobile", "reader"}:
            return "access"
        if pair <= {"reader", "gateway"} and self.graph.has_edge(src, dst):
            return "bt"
        if pair == {"gateway", "wifiap"}:
            return "wifi"
        if pair == {"wifiap", "server"}:
            return "ethernet"
        raise LinkError(f"no link between {src} ({a}) and {dst} ({b})")

    def _emit(self, node: NodeId, outputs):
        now_us = self.queue.now_us
        for out in outputs:
            if isinstance(out, Note):
                self.trace.add(now_us, out.kind, node, node, out.detail)
            elif isinstance(out, Timer):
                self._push(now_us + to_us(out.delay), _Deliver(Message(out.payload, node, node)))
            elif isinstance(out.payload, ConnectAttempt):
                self.link(out.src, out.dst)
                self._push(now_us + self._lat_us["connect"], _ConnectDone(out))
            else:
                kind = self.link(out.src, out.dst)
                self._push(now_us + self._lat_us[kind], _Deliver(out))

    def _complete_connect(self, attempt: Message) -> Message:
        """Paging finished: re-check range and capacity at this instant."""
        reader, target = attempt.src, attempt.payload.target
        state = self.states[reader]
        now = self.queue.now
        if not self.ctx.mobile_in_range(reader, target, now):
            return Message(ConnectReject(target, "out_of_range"), attempt.dst, reader)
        if len(state.active_slaves) >= PICONET_CAPACITY:
            return Message(ConnectReject(target, "piconet_full"), attempt.dst, reader)
        return attempt

    def step(self):
        event = self.queue.pop()
        self.delivered += 1
        item = event.payload
        msg = item.message if isinstance(item, _Deliver) else self._complete_connect(item.attempt)
        self.trace.add(event.at_us, msg.kind, msg.src, msg.dst, describe(msg.payload))
        state = self.states[msg.dst]
        new_state, outputs = STEP_FUNCTIONS[type(state)](state, msg, event.at, self.ctx)
        self.states[msg.dst] = new_state
        if isinstance(new_state, ReaderState):
            self.max_slaves = max(self.max_slaves, len(new_state.active_slaves))
        self._emit(msg.dst, outputs)

    def run(self, until: float) -> Trace:
        if until <= 0:
            raise ValueError("until must be positive")
        if not self._loaded:
            self._load()
        limit = to_us(until)
        while self.queue and self.queue.peek().at_us <= limit:
            self.step()
        log.debug("stopped at %.6f s: %d delivered, %d queued",
                  self.queue.now, self.delivered, len(self.queue))
        return self.trace


def run(scenario: Scenario, until: float, seed: int = 0) -> Trace:
    """Simulate `scenario` up to `until` seconds.

    `seed` is accepted for interface symmetry with the scenario generators;
    a fixed scenario always produces the same trace.
    """
    return Simulator(scenario).run(until)


def positioning_error(trace, scenario: Scenario) -> list[tuple[TraceRecord, float]]:
    """Distance from the reporting reader to the target at connection time.

    One entry per LocationResponse/LocationUpdate leaving the server.
    """
    out = []
    for rec in trace:
        if rec.kind not in ("LocationResponse", "LocationUpdate") or rec.src != scenario.server:
            continue
        f = rec.fields
        target: BtAddress = parse_bt_address(f["target"])
        at = float(f["at"])
        where = scenario.mobile_by_address[target].path.position_at(at)
        out.append((rec, distance(scenario.position_of(f["reader"]), where)))
    return out


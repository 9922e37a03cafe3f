"""Pure per-role step functions.

Each ``*_step(state, event, now, ctx)`` takes one delivered `Message` and
returns the next state plus a list of outputs (`Message`, `Timer` or
`Note`). Nothing is mutated; the static radio world every node may consult
(positions, neighbors, mobility paths, timing) lives in the frozen
`NodeContext`, so identical inputs always give identical results.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Mapping

from .core import (
    AssetRegistry,
    BtAddress,
    LatencyConfig,
    LookupTable,
    MobilityPath,
    NodeId,
    Position,
    RangeModel,
    UnknownAsset,
    distance,
    in_range,
    looks_like_address,
    lookup_location,
    parse_bt_address,
    resolve_target,
)
from .messages import (
    ConnectAccept,
    ConnectAttempt,
    ConnectionReport,
    ConnectReject,
    LocateBroadcast,
    LocateDeadline,
    LocationResponse,
    LocationUpdate,
    Message,
    MobInfo,
    ModifiedMobInfo,
    Note,
    OriginatorId,
    RefreshTick,
    RelayedRequest,
    RequestTimer,
    TargetNotFound,
    Timer,
    TrackRequest,
    ROUTED_DOWNSTREAM,
    format_detail,
)
from .routing import BroadcastSeen, record_broadcast

PICONET_CAPACITY = 7


@dataclass(frozen=True, eq=False)
class NodeContext:
    ranges: RangeModel
    latencies: LatencyConfig
    positions: Mapping[NodeId, Position]
    bt_neighbors: Mapping[NodeId, tuple[NodeId, ...]]
    readers: tuple[NodeId, ...]
    mobile_paths: Mapping[BtAddress, MobilityPath]
    mobile_ids: Mapping[BtAddress, NodeId]

    def mobile_position(self, addr: BtAddress, t: float) -> Position:
        return self.mobile_paths[addr].position_at(t)

    def mobile_in_range(self, node: NodeId, addr: BtAddress, t: float) -> bool:
        if addr not in self.mobile_paths:
            return False
        return in_range(self.ranges.bt_range_m, self.positions[node], self.mobile_position(addr, t))

    def nearest_reader(self, pos: Position) -> NodeId | None:
        candidates = [
            (distance(self.positions[r], pos), r)
            for r in self.readers
            if in_range(self.ranges.bt_range_m, self.positions[r], pos)
        ]
        return min(candidates)[1] if candidates else None


def _forward_downstream(node: NodeId, msg: Message, ctx: NodeContext) -> list:
    """Pop the next hop off a source-routed reply."""
    p = msg.payload
    if p.route:
        nxt, rest = p.route[0], p.route[1:]
        return [Message(dataclasses.replace(p, route=rest), node, nxt)]
    if p.originator.ingress_reader != node:
        return [Note("Misrouted", format_detail({"originator": p.originator}))]
    return [Message(p, node, ctx.mobile_ids[p.originator.mobile])]


# --- mobile ---------------------------------------------------------------


@dataclass(frozen=True)
class MobileState:
    id: NodeId
    address: BtAddress
    path: MobilityPath
    replies: int = 0


def mobile_step(state: MobileState, event: Message, now: float, ctx: NodeContext):
    p = event.payload
    if isinstance(p, RequestTimer):
        here = state.path.position_at(now)
        reader = ctx.nearest_reader(here)
        if reader is None:
            return state, [Note("NoReaderInRange", format_detail({"query": p.query}))]
        info = _mob_info(p)
        return state, [Message(TrackRequest(info, state.address), state.id, reader)]
    if isinstance(p, ConnectAttempt):
        if p.target != state.address:
            return state, []
        return state, [Message(ConnectAccept(state.address), state.id, event.src)]
    if isinstance(p, ROUTED_DOWNSTREAM):
        return dataclasses.replace(state, replies=state.replies + 1), []
    return state, []


def _mob_info(timer: RequestTimer) -> MobInfo:
    if looks_like_address(timer.query):
        return MobInfo(parse_bt_address(timer.query), timer.name, timer.another_info)
    return MobInfo(None, timer.query, timer.another_info)


# --- reader ---------------------------------------------------------------


@dataclass(frozen=True)
class PendingAttempt:
    target: BtAddress
    originator: OriginatorId
    seq: int


@dataclass(frozen=True)
class ReaderState:
    id: NodeId
    ap_address: BtAddress
    next_hop: NodeId | None
    active_slaves: frozenset[BtAddress] = frozenset()
    seen: BroadcastSeen = field(default_factory=BroadcastSeen)
    attempts: tuple[PendingAttempt, ...] = ()
    request_counter: int = 0

    def __post_init__(self):
        if len(self.active_slaves) > PICONET_CAPACITY:
            raise ValueError(f"{self.id}: piconet over capacity")

    @property
    def attempting(self) -> frozenset[BtAddress]:
        return frozenset(a.target for a in self.attempts)


def _upstream(state, payload) -> list:
    if state.next_hop is None:
        return [Note("NoRouteToGateway", format_detail({"kind": type(payload).__name__}))]
    return [Message(payload, state.id, state.next_hop)]


def reader_step(state: ReaderState, event: Message, now: float, ctx: NodeContext):
    p = event.payload
    me = state.id

    if isinstance(p, TrackRequest):
        originator = OriginatorId(p.requester, me, state.request_counter)
        state = dataclasses.replace(state, request_counter=state.request_counter + 1)
        wrapped = ModifiedMobInfo(p.info, originator, (me,))
        out = [Note("OriginatorAssigned", format_detail({"originator": originator}))]
        return state, out + _upstream(state, RelayedRequest(wrapped))

    if isinstance(p, RelayedRequest):
        return state, _upstream(state, RelayedRequest(p.info.relayed_by(me)))

    if isinstance(p, ConnectionReport):
        return state, _upstream(state, p)

    if isinstance(p, LocateBroadcast):
        return _reader_broadcast(state, event, now, ctx)

    if isinstance(p, ConnectAccept):
        mine = [a for a in state.attempts if a.target == p.target]
        if not mine:
            return state, [Note("StaleAccept", format_detail({"target": p.target}))]
        slaves = state.active_slaves | {p.target}
        state = dataclasses.replace(
            state,
            active_slaves=slaves,
            attempts=tuple(a for a in state.attempts if a.target != p.target),
        )
        out = [Note("SlaveAdded", format_detail({"target": p.target, "slaves": len(slaves)}))]
        for a in mine:
            out += _upstream(state, ConnectionReport(me, p.target, now, a.originator, a.seq))
        return state, out

    if isinstance(p, ConnectReject):
        slaves = state.active_slaves - {p.target}
        state = dataclasses.replace(
            state,
            active_slaves=slaves,
            attempts=tuple(a for a in state.attempts if a.target != p.target),
        )
        detail = {"target": p.target, "reason": p.reason, "slaves": len(slaves)}
        return state, [Note("ConnectFailed", format_detail(detail))]

    if isinstance(p, ROUTED_DOWNSTREAM):
        return state, _forward_downstream(me, event, ctx)

    return state, []


def _reader_broadcast(state: ReaderState, event: Message, now: float, ctx: NodeContext):
    p = event.payload
    me = state.id
    seen, first = record_broadcast(state.seen, p.seq)
    if not first:
        return state, []
    out: list = [Note("FloodAccepted", format_detail({"seq": p.seq}))]
    out += [Message(p, me, peer) for peer in ctx.bt_neighbors[me] if peer != event.src]

    # slaves that wandered off are dropped before anything else
    kept = frozenset(a for a in state.active_slaves if ctx.mobile_in_range(me, a, now))
    for lost in sorted(state.active_slaves - kept):
        out.append(Note("SlaveRemoved", format_detail({"target": lost, "slaves": len(kept)})))
    state = dataclasses.replace(state, seen=seen, active_slaves=kept)

    if p.target in kept:
        return state, out + _upstream(
            state, ConnectionReport(me, p.target, now, p.originator, p.seq))
    entry = PendingAttempt(p.target, p.originator, p.seq)
    if p.target in state.attempting:
        return dataclasses.replace(state, attempts=state.attempts + (entry,)), out
    if not ctx.mobile_in_range(me, p.target, now):
        return state, out
    busy = len(kept) + len(state.attempting)
    if busy >= PICONET_CAPACITY:
        out.append(Note("PiconetFull", format_detail({"target": p.target, "slaves": len(kept)})))
        return state, out
    state = dataclasses.replace(state, attempts=state.attempts + (entry,))
    out.append(Message(ConnectAttempt(p.target), me, ctx.mobile_ids[p.target]))
    return state, out


# --- gateway --------------------------------------------------------------


@dataclass(frozen=True)
class GatewayState:
    id: NodeId
    serving_wifi_ap: NodeId
    seen: BroadcastSeen = field(default_factory=BroadcastSeen)


def gateway_step(state: GatewayState, event: Message, now: float, ctx: NodeContext):
    p = event.payload
    me = state.id
    if isinstance(p, RelayedRequest):
        # the gateway is the last BT hop, so it joins the recorded path
        return state, [Message(RelayedRequest(p.info.relayed_by(me)), me, state.serving_wifi_ap)]
    if isinstance(p, ConnectionReport):
        return state, [Message(p, me, state.serving_wifi_ap)]
    if isinstance(p, LocateBroadcast):
        seen, first = record_broadcast(state.seen, p.seq)
        if not first:
            return state, []
        out: list = [Note("FloodAccepted", format_detail({"seq": p.seq}))]
        out += [Message(p, me, peer) for peer in ctx.bt_neighbors[me] if peer != event.src]
        return dataclasses.replace(state, seen=seen), out
    if isinstance(p, ROUTED_DOWNSTREAM):
        return state, _forward_downstream(me, event, ctx)
    return state, []


# --- Wi-Fi access point ---------------------------------------------------


@dataclass(frozen=True)
class WifiApState:
    id: NodeId
    server: NodeId
    served_gateways: tuple[NodeId, ...] = ()


def wifi_ap_step(state: WifiApState, event: Message, now: float, ctx: NodeContext):
    p = event.payload
    me = state.id
    if isinstance(p, (RelayedRequest, ConnectionReport)):
        return state, [Message(p, me, state.server)]
    if isinstance(p, LocateBroadcast):
        return state, [Message(p, me, gw) for gw in state.served_gateways]
    if isinstance(p, ROUTED_DOWNSTREAM):
        return state, _forward_downstream(me, event, ctx)
    return state, []


# --- server ---------------------------------------------------------------


@dataclass(frozen=True)
class PendingRequest:
    target: BtAddress
    deadline: float
    answered: bool
    reply_via: tuple[NodeId, ...]  # Wi-Fi AP, then the reversed hop path


@dataclass(frozen=True)
class ActiveTrack:
    target: BtAddress
    last_reader: NodeId | None
    started: float
    reply_via: tuple[NodeId, ...]


@dataclass(frozen=True)
class ServerState:
    id: NodeId
    registry: AssetRegistry
    lookup: LookupTable
    reader_aps: Mapping[NodeId, BtAddress]
    wifi_aps: tuple[NodeId, ...]
    pending: Mapping[OriginatorId, PendingRequest] = field(default_factory=dict)
    active_tracks: Mapping[OriginatorId, ActiveTrack] = field(default_factory=dict)
    rounds: Mapping[int, tuple[OriginatorId, bool]] = field(default_factory=dict)
    next_broadcast_seq: int = 0


class MismatchedIdentity(ValueError):
    pass


def identify(registry: AssetRegistry, info: MobInfo) -> BtAddress:
    """Resolve a request payload to one registered asset.

    When both the address and the name are given they must name the same
    asset.
    """
    if info.bsid is None:
        return resolve_target(registry, info.name)
    addr = resolve_target(registry, str(info.bsid))
    if info.name:
        try:
            by_name = resolve_target(registry, info.name)
        except UnknownAsset:
            by_name = None
        if by_name != addr:
            raise MismatchedIdentity(f"{info.name!r} is not {info.bsid}")
    return addr


def _reply(state: ServerState, payload, via: tuple[NodeId, ...]) -> Message:
    return Message(dataclasses.replace(payload, route=via[1:]), state.id, via[0])


def _broadcast(state: ServerState, target: BtAddress, originator: OriginatorId):
    seq = state.next_broadcast_seq
    rounds = {**state.rounds, seq: (originator, False)}
    state = dataclasses.replace(state, next_broadcast_seq=seq + 1, rounds=rounds)
    msgs = [Message(LocateBroadcast(seq, target, originator), state.id, ap) for ap in state.wifi_aps]
    return state, msgs


def server_step(state: ServerState, event: Message, now: float, ctx: NodeContext):
    p = event.payload
    timing = ctx.latencies

    if isinstance(p, RelayedRequest):
        info = p.info
        orig = info.originator
        via = (event.src,) + tuple(reversed(info.hop_path))
        query = info.base.name if info.base.bsid is None else str(info.base.bsid)
        try:
            target = identify(state.registry, info.base)
        except UnknownAsset:
            note = Note("UnknownAsset", format_detail({"query": query, "originator": orig}))
            return state, [note, _reply(state, TargetNotFound(None, query, orig), via)]
        except MismatchedIdentity:
            detail = {"bsid": info.base.bsid, "name": info.base.name, "originator": orig}
            return state, [Note("MismatchedIdentity", format_detail(detail))]
        deadline = now + timing.locate_timeout
        entry = PendingRequest(target, deadline, False, via)
        state = dataclasses.replace(state, pending={**state.pending, orig: entry})
        state, msgs = _broadcast(state, target, orig)
        return state, msgs + [Timer(timing.locate_timeout, LocateDeadline(orig))]

    if isinstance(p, ConnectionReport):
        round_ = state.rounds.get(p.seq)
        if round_ is None or round_[1] or round_[0] != p.originator:
            return state, [Note("ReportIgnored", format_detail({"seq": p.seq, "reader": p.reader}))]
        orig = p.originator
        state = dataclasses.replace(state, rounds={**state.rounds, p.seq: (orig, True)})
        label = lookup_location(state.lookup, state.reader_aps[p.reader])
        pending = state.pending.get(orig)
        if pending is not None and not pending.answered:
            track = ActiveTrack(p.target, p.reader, now, pending.reply_via)
            state = dataclasses.replace(
                state,
                pending={**state.pending, orig: dataclasses.replace(pending, answered=True)},
                active_tracks={**state.active_tracks, orig: track},
            )
            resp = LocationResponse(p.target, label, p.reader, p.at, orig)
            return state, [_reply(state, resp, pending.reply_via),
                           Timer(timing.refresh_interval, RefreshTick(orig))]
        track = state.active_tracks.get(orig)
        if track is None or track.last_reader == p.reader:
            return state, []
        tracks = {**state.active_tracks, orig: dataclasses.replace(track, last_reader=p.reader)}
        state = dataclasses.replace(state, active_tracks=tracks)
        upd = LocationUpdate(p.target, label, p.reader, p.at, orig)
        return state, [_reply(state, upd, track.reply_via)]

    if isinstance(p, LocateDeadline):
        pending = state.pending.get(p.originator)
        if pending is None or pending.answered:
            return state, []
        rest = {k: v for k, v in state.pending.items() if k != p.originator}
        state = dataclasses.replace(state, pending=rest)
        return state, [_reply(state, TargetNotFound(pending.target, str(pending.target),
                                                    p.originator), pending.reply_via)]

    if isinstance(p, RefreshTick):
        track = state.active_tracks.get(p.originator)
        if track is None:
            return state, []
        if now - track.started >= timing.track_ttl:
            rest = {k: v for k, v in state.active_tracks.items() if k != p.originator}
            state = dataclasses.replace(state, active_tracks=rest)
            return state, [Note("TrackExpired", format_detail({"originator": p.originator}))]
        state, msgs = _broadcast(state, track.target, p.originator)
        return state, msgs + [Timer(timing.refresh_interval, p)]

    # packet extractor: anything else is not tracking traffic
    return state, []

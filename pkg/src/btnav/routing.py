"""Static BT mesh topology: adjacency, next-hop routes, flood dedup."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

from .core import NodeId, Position, RangeModel, in_range

MESH_KINDS = ("reader", "gateway")


@dataclass(frozen=True)
class TopologyGraph:
    nodes: frozenset[NodeId]
    edges: frozenset[frozenset[NodeId]]

    @cached_property
    def adjacency(self) -> dict[NodeId, tuple[NodeId, ...]]:
        adj: dict[NodeId, set[NodeId]] = {n: set() for n in self.nodes}
        for edge in self.edges:
            a, b = tuple(edge)
            adj[a].add(b)
            adj[b].add(a)
        return {n: tuple(sorted(peers)) for n, peers in adj.items()}

    def neighbors(self, node: NodeId) -> tuple[NodeId, ...]:
        return self.adjacency.get(node, ())

    def has_edge(self, a: NodeId, b: NodeId) -> bool:
        return frozenset((a, b)) in self.edges


@dataclass(frozen=True)
class RouteTable:
    next_hop: Mapping[NodeId, NodeId]
    hop_count: Mapping[NodeId, int]

    def path_from(self, reader: NodeId) -> list[NodeId]:
        """Nodes visited following next hops from `reader` to its gateway."""
        path = [reader]
        while path[-1] in self.next_hop:
            path.append(self.next_hop[path[-1]])
            if len(path) > len(self.hop_count) + 1:
                raise RuntimeError(f"routing loop from {reader}")
        return path


@dataclass(frozen=True)
class BroadcastSeen:
    seen: frozenset[int] = field(default_factory=frozenset)

    def __contains__(self, seq: int) -> bool:
        return seq in self.seen


def build_adjacency(
    placements: Mapping[NodeId, tuple[str, Position]], ranges: RangeModel
) -> TopologyGraph:
    mesh = sorted(label for label, (kind, _) in placements.items() if kind in MESH_KINDS)
    edges = set()
    for i, a in enumerate(mesh):
        for b in mesh[i + 1:]:
            if in_range(ranges.bt_range_m, placements[a][1], placements[b][1]):
                edges.add(frozenset((a, b)))
    return TopologyGraph(frozenset(mesh), frozenset(edges))


def compute_next_hops(g: TopologyGraph, gateways) -> RouteTable:
    """Multi-source BFS from the gateways.

    A reader's next hop is its lexicographically smallest neighbor that is
    one hop closer to some gateway. Gateways themselves get hop count 0 and
    no next hop. Readers with no path to a gateway are left out.
    """
    gateways = set(gateways)
    unknown = gateways - g.nodes
    if unknown:
        raise ValueError(f"gateways not in graph: {sorted(unknown)}")
    hops: dict[NodeId, int] = {gw: 0 for gw in gateways}
    frontier = deque(sorted(gateways))
    while frontier:
        node = frontier.popleft()
        for peer in g.neighbors(node):
            if peer not in hops:
                hops[peer] = hops[node] + 1
                frontier.append(peer)
    next_hop = {}
    for node, count in hops.items():
        if count == 0:
            continue
        next_hop[node] = min(p for p in g.neighbors(node) if hops.get(p) == count - 1)
    return RouteTable(next_hop, hops)


def record_broadcast(state: BroadcastSeen, seq: int) -> tuple[BroadcastSeen, bool]:
    if seq in state.seen:
        return state, False
    return BroadcastSeen(state.seen | {seq}), True

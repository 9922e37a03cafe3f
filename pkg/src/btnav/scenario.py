"""Line-oriented scenario files.

Grammar, one directive per line, ``#`` starts a comment::

    config <key> <value>
    server <label>
    wifiap <label> <x> <y>
    gateway <label> <x> <y>
    reader <label> <bt_address> <x> <y> "<location label>"
    mobile <label> <bt_address> "<name>" "<another_info>" path (<t> <x> <y>) ...
    request at=<t> from=<mobile label> target="<name or address>" [name="<name>"] [info="<text>"]

Reader lines double as lookup-table rows; mobile lines populate the asset
registry.
"""

from __future__ import annotations

import dataclasses
import math
import re
import shlex
from dataclasses import dataclass, field
from functools import cached_property

from .core import (
    Asset,
    AssetRegistry,
    BtAddress,
    LatencyConfig,
    LookupTable,
    MalformedAddress,
    MobilityPath,
    NodeId,
    Position,
    RangeModel,
    distance,
    in_range,
    parse_bt_address,
)

RANGE_KEYS = {"bt_range": "bt_range_m", "wifi_range": "wifi_range_m"}
LATENCY_KEYS = tuple(f.name for f in dataclasses.fields(LatencyConfig))

_WAYPOINT_RE = re.compile(r"\(\s*(\S+)\s+(\S+)\s+(\S+)\s*\)")
_LABEL_RE = re.compile(r"^[A-Za-z0-9_.-]+$")


class ScenarioError(Exception):
    """Base class; `line` is the 1-based offending line (None if not tied to one)."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        self.message = message
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class ScenarioSyntaxError(ScenarioError):
    pass


class ValidationError(ScenarioError):
    pass


class DuplicateLabel(ValidationError):
    pass


class DuplicateServer(ValidationError):
    pass


class MissingServer(ValidationError):
    pass


class OrphanGateway(ValidationError):
    pass


class DuplicateAddress(ValidationError):
    pass


class DuplicateAssetName(ValidationError):
    pass


class UnknownNode(ValidationError):
    pass


@dataclass(frozen=True)
class InfraNode:
    label: NodeId
    position: Position


@dataclass(frozen=True)
class ReaderSpec:
    label: NodeId
    address: BtAddress
    position: Position
    location: str


@dataclass(frozen=True)
class MobileSpec:
    label: NodeId
    address: BtAddress
    name: str
    another_info: str
    path: MobilityPath


@dataclass(frozen=True)
class RequestSpec:
    at: float
    source: NodeId
    target_query: str
    name: str = ""
    another_info: str = ""


@dataclass(frozen=True)
class Scenario:
    server: NodeId | None = None
    ranges: RangeModel = field(default_factory=RangeModel)
    latencies: LatencyConfig = field(default_factory=LatencyConfig)
    wifi_aps: tuple[InfraNode, ...] = ()
    gateways: tuple[InfraNode, ...] = ()
    readers: tuple[ReaderSpec, ...] = ()
    mobiles: tuple[MobileSpec, ...] = ()
    requests: tuple[RequestSpec, ...] = ()

    @cached_property
    def lookup_table(self) -> LookupTable:
        return LookupTable.from_rows((r.address, r.location) for r in self.readers)

    @cached_property
    def registry(self) -> AssetRegistry:
        return AssetRegistry({m.address: Asset(m.name, m.another_info) for m in self.mobiles})

    @cached_property
    def kinds(self) -> dict[NodeId, str]:
        out = {self.server: "server"} if self.server else {}
        out.update((n.label, "wifiap") for n in self.wifi_aps)
        out.update((n.label, "gateway") for n in self.gateways)
        out.update((r.label, "reader") for r in self.readers)
        out.update((m.label, "mobile") for m in self.mobiles)
        return out

    @cached_property
    def placements(self) -> dict[NodeId, tuple[str, Position]]:
        """Fixed infrastructure positions (the server has none)."""
        out = {n.label: ("wifiap", n.position) for n in self.wifi_aps}
        out.update((n.label, ("gateway", n.position)) for n in self.gateways)
        out.update((r.label, ("reader", r.position)) for r in self.readers)
        return out

    @cached_property
    def mobile_by_address(self) -> dict[BtAddress, MobileSpec]:
        return {m.address: m for m in self.mobiles}

    def position_of(self, label: NodeId) -> Position:
        return self.placements[label][1]

    def serving_wifi_ap(self, gateway: NodeId) -> NodeId | None:
        """Nearest Wi-Fi AP within Wi-Fi range, ties to the smaller label."""
        gpos = self.position_of(gateway)
        candidates = [
            (distance(ap.position, gpos), ap.label)
            for ap in self.wifi_aps
            if in_range(self.ranges.wifi_range_m, ap.position, gpos)
        ]
        return min(candidates)[1] if candidates else None


def _number(token: str, lineno: int, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ScenarioSyntaxError(f"bad {what} {token!r}", lineno) from None
    if not math.isfinite(value):
        raise ScenarioSyntaxError(f"non-finite {what} {token!r}", lineno)
    return value


def _address(token: str, lineno: int) -> BtAddress:
    try:
        return parse_bt_address(token)
    except MalformedAddress:
        raise ScenarioSyntaxError(f"malformed Bluetooth address {token!r}", lineno) from None


def _expect(tokens: list[str], count: int, lineno: int, usage: str):
    if len(tokens) != count:
        raise ScenarioSyntaxError(f"expected: {usage}", lineno)


def _parse_path(tokens: list[str], lineno: int) -> MobilityPath:
    text = " ".join(tokens)
    waypoints = []
    pos = 0
    for m in _WAYPOINT_RE.finditer(text):
        if text[pos:m.start()].strip():
            raise ScenarioSyntaxError(f"bad waypoint list near {text[pos:m.start()]!r}", lineno)
        t, x, y = (_number(v, lineno, "waypoint value") for v in m.groups())
        waypoints.append((t, Position(x, y)))
        pos = m.end()
    if text[pos:].strip() or not waypoints:
        raise ScenarioSyntaxError("path needs one or more (<t> <x> <y>) waypoints", lineno)
    try:
        return MobilityPath(tuple(waypoints))
    except ValueError as exc:
        raise ScenarioSyntaxError(str(exc), lineno) from None


def _keywords(tokens: list[str], lineno: int, allowed: set[str]) -> dict[str, str]:
    out = {}
    for tok in tokens:
        key, sep, value = tok.partition("=")
        if not sep or key not in allowed:
            raise ScenarioSyntaxError(f"unexpected request field {tok!r}", lineno)
        if key in out:
            raise ScenarioSyntaxError(f"repeated request field {key!r}", lineno)
        out[key] = value
    return out


def parse_scenario(text: str) -> Scenario:
    servers: list[tuple[NodeId, int]] = []
    ranges: dict[str, float] = {}
    latencies: dict[str, float] = {}
    wifi_aps, gateways, readers, mobiles, requests = [], [], [], [], []
    lines: dict[NodeId, int] = {}
    request_lines: list[int] = []

    def claim(label: str, lineno: int):
        if not _LABEL_RE.match(label):
            raise ScenarioSyntaxError(f"bad node label {label!r}", lineno)
        if label in lines:
            raise DuplicateLabel(f"label {label!r} already used on line {lines[label]}", lineno)
        lines[label] = lineno

    for lineno, raw in enumerate(text.splitlines(), start=1):
        try:
            tokens = shlex.split(raw, comments=True)
        except ValueError as exc:
            raise ScenarioSyntaxError(str(exc), lineno) from None
        if not tokens:
            continue
        if any("\t" in tok for tok in tokens):
            raise ScenarioSyntaxError("tab characters are not allowed inside fields", lineno)
        directive, args = tokens[0], tokens[1:]

        if directive == "config":
            _expect(args, 2, lineno, "config <key> <value>")
            key, value = args[0], _number(args[1], lineno, "config value")
            if value <= 0:
                raise ValidationError(f"config {key} must be positive", lineno)
            if key in RANGE_KEYS:
                ranges[RANGE_KEYS[key]] = value
            elif key in LATENCY_KEYS:
                latencies[key] = value
            else:
                raise ScenarioSyntaxError(f"unknown config key {key!r}", lineno)
        elif directive == "server":
            _expect(args, 1, lineno, "server <label>")
            if servers:
                raise DuplicateServer(f"second server (first on line {servers[0][1]})", lineno)
            claim(args[0], lineno)
            servers.append((args[0], lineno))
        elif directive in ("wifiap", "gateway"):
            _expect(args, 3, lineno, f"{directive} <label> <x> <y>")
            claim(args[0], lineno)
            node = InfraNode(args[0], Position(_number(args[1], lineno, "x"),
                                               _number(args[2], lineno, "y")))
            (wifi_aps if directive == "wifiap" else gateways).append(node)
        elif directive == "reader":
            _expect(args, 5, lineno, 'reader <label> <bt_address> <x> <y> "<location>"')
            addr = _address(args[1], lineno)
            if not args[4].strip():
                raise ScenarioSyntaxError("empty location label", lineno)
            claim(args[0], lineno)
            for prev in readers:
                if prev.address == addr:
                    raise DuplicateAddress(f"reader address {addr} also on line {lines[prev.label]}", lineno)
            pos = Position(_number(args[2], lineno, "x"), _number(args[3], lineno, "y"))
            readers.append(ReaderSpec(args[0], addr, pos, args[4]))
        elif directive == "mobile":
            if len(args) < 6 or args[4] != "path":
                raise ScenarioSyntaxError(
                    'expected: mobile <label> <bt_address> "<name>" "<info>" path (<t> <x> <y>) ...', lineno)
            addr = _address(args[1], lineno)
            claim(args[0], lineno)
            for prev in mobiles:
                if prev.address == addr:
                    raise DuplicateAddress(f"mobile address {addr} also on line {lines[prev.label]}", lineno)
                if prev.name == args[2]:
                    raise DuplicateAssetName(f"asset name {args[2]!r} also on line {lines[prev.label]}", lineno)
            mobiles.append(MobileSpec(args[0], addr, args[2], args[3], _parse_path(args[5:], lineno)))
        elif directive == "request":
            kw = _keywords(args, lineno, {"at", "from", "target", "name", "info"})
            missing = {"at", "from", "target"} - kw.keys()
            if missing:
                raise ScenarioSyntaxError(f"request missing {', '.join(sorted(missing))}", lineno)
            at = _number(kw["at"], lineno, "request time")
            if at < 0:
                raise ValidationError("request time must be non-negative", lineno)
            requests.append(RequestSpec(at, kw["from"], kw["target"], kw.get("name", ""), kw.get("info", "")))
            request_lines.append(lineno)
        else:
            raise ScenarioSyntaxError(f"unknown directive {directive!r}", lineno)

    if not servers:
        raise MissingServer("scenario declares no server")
    try:
        scenario = Scenario(
            server=servers[0][0],
            ranges=RangeModel(**ranges),
            latencies=LatencyConfig(**latencies),
            wifi_aps=tuple(wifi_aps),
            gateways=tuple(gateways),
            readers=tuple(readers),
            mobiles=tuple(mobiles),
            requests=tuple(requests),
        )
    except ValueError as exc:
        raise ValidationError(str(exc)) from None

    for gw in scenario.gateways:
        if scenario.serving_wifi_ap(gw.label) is None:
            raise OrphanGateway(f"gateway {gw.label} has no Wi-Fi AP within "
                                f"{scenario.ranges.wifi_range_m} m", lines[gw.label])
    for req, lineno in zip(scenario.requests, request_lines):
        if scenario.kinds.get(req.source) != "mobile":
            raise UnknownNode(f"request source {req.source!r} is not a mobile", lineno)
    return scenario


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def _num(v: float) -> str:
    return repr(float(v))


def _q(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def render_scenario(s: Scenario) -> str:
    """Canonical text form; `parse_scenario` reads it back to an equal Scenario."""
    out = []
    for key, attr in RANGE_KEYS.items():
        out.append(f"config {key} {_num(getattr(s.ranges, attr))}")
    for key in LATENCY_KEYS:
        out.append(f"config {key} {_num(getattr(s.latencies, key))}")
    if s.server:
        out.append(f"server {s.server}")
    for n in s.wifi_aps:
        out.append(f"wifiap {n.label} {_num(n.position.x)} {_num(n.position.y)}")
    for n in s.gateways:
        out.append(f"gateway {n.label} {_num(n.position.x)} {_num(n.position.y)}")
    for r in s.readers:
        out.append(f"reader {r.label} {r.address} {_num(r.position.x)} {_num(r.position.y)} {_q(r.location)}")
    for m in s.mobiles:
        path = " ".join(f"({_num(t)} {_num(p.x)} {_num(p.y)})" for t, p in m.path.waypoints)
        out.append(f"mobile {m.label} {m.address} {_q(m.name)} {_q(m.another_info)} path {path}")
    for r in s.requests:
        line = f"request at={_num(r.at)} from={r.source} target={_q(r.target_query)}"
        if r.name:
            line += f" name={_q(r.name)}"
        if r.another_info:
            line += f" info={_q(r.another_info)}"
        out.append(line)
    return "\n".join(out) + "\n"

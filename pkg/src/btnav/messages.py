"""Protocol payloads and their one-line trace rendering.

Every payload is a frozen dataclass; the class name is the message kind
that shows up in traces. `describe` renders a payload as space-separated
``key=value`` pairs (shell-quoted where needed) and `parse_detail` reads
them back.
"""

from __future__ import annotations

import dataclasses
import shlex
from dataclasses import dataclass
from typing import Union

from .core import BtAddress, NodeId, parse_bt_address


@dataclass(frozen=True)
class MobInfo:
    # None when the requester only knows the person's name
    bsid: BtAddress | None
    name: str = ""
    another_info: str = ""


@dataclass(frozen=True)
class OriginatorId:
    """Who asked: requesting device, the reader it asked, and a per-reader counter."""

    mobile: BtAddress
    ingress_reader: NodeId
    request_seq: int

    def __str__(self) -> str:
        return f"{self.mobile}/{self.ingress_reader}/{self.request_seq}"

    @classmethod
    def parse(cls, text: str) -> "OriginatorId":
        mobile, reader, seq = text.split("/")
        return cls(parse_bt_address(mobile), reader, int(seq))


@dataclass(frozen=True)
class ModifiedMobInfo:
    base: MobInfo
    originator: OriginatorId
    hop_path: tuple[NodeId, ...]

    def relayed_by(self, node: NodeId) -> "ModifiedMobInfo":
        return dataclasses.replace(self, hop_path=self.hop_path + (node,))


@dataclass(frozen=True)
class TrackRequest:
    info: MobInfo
    requester: BtAddress


@dataclass(frozen=True)
class RelayedRequest:
    info: ModifiedMobInfo


@dataclass(frozen=True)
class LocateBroadcast:
    seq: int
    target: BtAddress
    originator: OriginatorId


@dataclass(frozen=True)
class ConnectAttempt:
    target: BtAddress


@dataclass(frozen=True)
class ConnectAccept:
    target: BtAddress


@dataclass(frozen=True)
class ConnectReject:
    target: BtAddress
    reason: str


@dataclass(frozen=True)
class ConnectionReport:
    reader: NodeId
    target: BtAddress
    at: float
    originator: OriginatorId
    seq: int  # broadcast round this report answers


@dataclass(frozen=True)
class LocationResponse:
    target: BtAddress
    location_label: str
    reader: NodeId
    at: float
    originator: OriginatorId
    route: tuple[NodeId, ...] = ()


@dataclass(frozen=True)
class LocationUpdate(LocationResponse):
    pass


@dataclass(frozen=True)
class TargetNotFound:
    target: BtAddress | None
    query: str
    originator: OriginatorId
    route: tuple[NodeId, ...] = ()


@dataclass(frozen=True)
class RefreshTick:
    originator: OriginatorId


# timers that are not part of the radio protocol proper


@dataclass(frozen=True)
class RequestTimer:
    query: str
    name: str = ""
    another_info: str = ""


@dataclass(frozen=True)
class LocateDeadline:
    originator: OriginatorId


Payload = Union[
    TrackRequest, RelayedRequest, LocateBroadcast, ConnectAttempt, ConnectAccept,
    ConnectReject, ConnectionReport, LocationResponse, LocationUpdate, TargetNotFound,
    RefreshTick, RequestTimer, LocateDeadline,
]

ROUTED_DOWNSTREAM = (LocationResponse, TargetNotFound)


@dataclass(frozen=True)
class Message:
    payload: Payload
    src: NodeId
    dst: NodeId

    @property
    def kind(self) -> str:
        return type(self.payload).__name__


@dataclass(frozen=True)
class Timer:
    """Self-addressed payload delivered `delay` seconds from now."""

    delay: float
    payload: Payload


@dataclass(frozen=True)
class Note:
    """Protocol event recorded in the trace without sending anything."""

    kind: str
    detail: str = ""


def _render_value(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.6f}"
    if isinstance(value, tuple):
        return ",".join(value) if value else "-"
    return str(value)


def _flatten(obj, out: dict[str, str]):
    for f in dataclasses.fields(obj):
        value = getattr(obj, f.name)
        if dataclasses.is_dataclass(value) and not isinstance(value, (BtAddress, OriginatorId)):
            _flatten(value, out)
        else:
            out[f.name] = _render_value(value)
    return out


def describe(payload) -> str:
    return format_detail(_flatten(payload, {}))


def format_detail(pairs: dict[str, object]) -> str:
    return " ".join(f"{k}={shlex.quote(_render_value(v))}" for k, v in pairs.items())


def parse_detail(detail: str) -> dict[str, str]:
    pairs = {}
    for token in shlex.split(detail):
        key, sep, value = token.partition("=")
        if sep:
            pairs[key] = value
    return pairs

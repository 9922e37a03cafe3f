"""Trace serialization and aggregate metrics."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from statistics import fmean

from .engine import Trace, TraceRecord, positioning_error
from .scenario import Scenario

TRACE_HEADER = "time\tkind\tsrc\tdst\tdetail"


def write_trace(trace) -> str:
    lines = [TRACE_HEADER]
    for rec in trace:
        lines.append(f"{rec.at:.6f}\t{rec.kind}\t{rec.src}\t{rec.dst}\t{rec.detail}")
    return "\n".join(lines) + "\n"


def read_trace(text: str) -> Trace:
    lines = text.splitlines()
    if not lines or lines[0] != TRACE_HEADER:
        raise ValueError("missing trace header")
    records = []
    for n, line in enumerate(lines[1:], start=2):
        parts = line.split("\t")
        if len(parts) != 5:
            raise ValueError(f"line {n}: expected 5 tab-separated fields")
        at, kind, src, dst, detail = parts
        records.append(TraceRecord(float(at), kind, src, dst, detail))
    return Trace(records)


@dataclass(frozen=True)
class MetricsReport:
    responses: int
    not_found: int
    mean_error_m: float
    max_error_m: float
    mean_latency_s: float
    handovers: int

    def to_tsv(self) -> str:
        rows = ["metric\tvalue"]
        for key, value in asdict(self).items():
            rows.append(f"{key}\t{value:.6f}" if isinstance(value, float) else f"{key}\t{value}")
        return "\n".join(rows) + "\n"


def request_latencies(trace, scenario: Scenario) -> dict[str, float]:
    """Seconds from a request entering its reader to the answer reaching the requester.

    Keyed by originator id; unanswered requests are absent.
    """
    issued = {}
    answered = {}
    for rec in trace:
        if rec.kind == "OriginatorAssigned":
            issued[rec.fields["originator"]] = rec.at
        elif rec.kind == "LocationResponse" and scenario.kinds.get(rec.dst) == "mobile":
            answered.setdefault(rec.fields["originator"], rec.at)
    return {o: answered[o] - issued[o] for o in answered if o in issued}


def compute_metrics(trace, scenario: Scenario) -> MetricsReport:
    errors = positioning_error(trace, scenario)
    from_server = [r for r in trace if r.src == scenario.server]
    responses = sum(r.kind == "LocationResponse" for r in from_server)
    not_found = sum(r.kind == "TargetNotFound" for r in from_server)
    handovers = sum(r.kind == "LocationUpdate" for r in from_server)
    error_values = [e for _, e in errors]
    latencies = list(request_latencies(trace, scenario).values())
    return MetricsReport(
        responses=responses,
        not_found=not_found,
        mean_error_m=fmean(error_values) if error_values else 0.0,
        max_error_m=max(error_values, default=0.0),
        mean_latency_s=fmean(latencies) if latencies else 0.0,
        handovers=handovers,
    )

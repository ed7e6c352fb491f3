"""Timing records for benchmark runs and the CSV/summary report."""

from __future__ import annotations

import json
import math
import statistics
from dataclasses import dataclass, fields


class BenchError(Exception):
    pass


class WriteFailure(BenchError):
    pass


CSV_COLUMNS = (
    "job_id",
    "scenario",
    "arbitration_ms",
    "latency_ms",
    "execution_ms",
    "response_ms",
    "bytes_sent",
    "bytes_received",
)


@dataclass(frozen=True)
class TimingRecord:
    """Per-job timing, each component measured where it happens.

    arbitration_ms comes from the master, execution_ms from the executing
    node, response_ms from the gateway clock around the whole job;
    latency_ms is the remainder attributed to transport.
    """

    job_id: str
    scenario: str
    arbitration_ms: float
    latency_ms: float
    execution_ms: float
    response_ms: float
    bytes_sent: int
    bytes_received: int

    def __post_init__(self):
        for name in ("arbitration_ms", "latency_ms", "execution_ms", "response_ms"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise BenchError(f"{name} must be finite and non-negative, got {value}")
        if self.bytes_sent < 0 or self.bytes_received < 0:
            raise BenchError("byte counts must be non-negative")
        if self.response_ms + 1e-6 < self.arbitration_ms + self.execution_ms:
            raise BenchError("response_ms cannot undercut arbitration_ms + execution_ms")

    def to_row(self) -> list[str]:
        return [str(getattr(self, f.name)) for f in fields(self)]


def _percentile_95(values: list[float]) -> float:
    ordered = sorted(values)
    rank = 0.95 * (len(ordered) - 1)
    lo = int(math.floor(rank))
    hi = int(math.ceil(rank))
    if lo == hi:
        return ordered[lo]
    frac = rank - lo
    return ordered[lo] * (1 - frac) + ordered[hi] * frac


def summarize(records: list[TimingRecord]) -> dict[str, dict[str, dict[str, float]]]:
    """Mean/median/p95 for each timing column, grouped by scenario."""
    if not records:
        raise BenchError("cannot summarize zero records")
    out: dict[str, dict[str, dict[str, float]]] = {}
    for scenario in sorted({r.scenario for r in records}):
        rows = [r for r in records if r.scenario == scenario]
        per_metric = {}
        for name in ("arbitration_ms", "latency_ms", "execution_ms", "response_ms"):
            values = [getattr(r, name) for r in rows]
            per_metric[name] = {
                "mean": statistics.fmean(values),
                "median": statistics.median(values),
                "p95": _percentile_95(values),
            }
        out[scenario] = per_metric
    return out


def format_summary(records: list[TimingRecord]) -> str:
    stats = summarize(records)
    lines = [f"{'scenario':<16}{'metric':<16}{'mean':>12}{'median':>12}{'p95':>12}"]
    for scenario, metrics in stats.items():
        for name, row in metrics.items():
            lines.append(
                f"{scenario:<16}{name:<16}"
                f"{row['mean']:>12.3f}{row['median']:>12.3f}{row['p95']:>12.3f}"
            )
    return "\n".join(lines)


def report(records: list[TimingRecord], path: str) -> dict:
    """Write the per-job CSV plus summary sidecars; return the summary.

    path gets the CSV; path + '.summary.txt' the aligned table and
    path + '.summary.json' the same numbers machine-readably.
    """
    if not records:
        raise WriteFailure("no records to report")
    lines = [",".join(CSV_COLUMNS)]
    for record in records:
        lines.append(",".join(record.to_row()))
    summary = summarize(records)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
        with open(f"{path}.summary.txt", "w", encoding="utf-8") as fh:
            fh.write(format_summary(records) + "\n")
        with open(f"{path}.summary.json", "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise WriteFailure(f"cannot write {path}: {exc}") from exc
    return summary


def parse_records_csv(text: str) -> list[TimingRecord]:
    """Inverse of the CSV written by report()."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or tuple(lines[0].split(",")) != CSV_COLUMNS:
        raise BenchError(f"unrecognized records header: {lines[:1]!r}")
    out = []
    for ln in lines[1:]:
        f = ln.split(",")
        if len(f) != len(CSV_COLUMNS):
            raise BenchError(f"bad record row: {ln!r}")
        out.append(
            TimingRecord(
                job_id=f[0],
                scenario=f[1],
                arbitration_ms=float(f[2]),
                latency_ms=float(f[3]),
                execution_ms=float(f[4]),
                response_ms=float(f[5]),
                bytes_sent=int(f[6]),
                bytes_received=int(f[7]),
            )
        )
    return out

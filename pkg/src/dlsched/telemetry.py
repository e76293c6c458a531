"""Run reports, imbalance metrics, and CSV emission.

One RunReport summarizes one repetition of one configuration.  The
summary CSV holds a single row per report; chunk and steal traces go to
optional detail files.  Timestamps inside traces are run-relative so
identical runs produce diffable files.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Optional, Sequence, TYPE_CHECKING, Union

from .core import DegenerateInput, InvalidParams, SchedConfig
from .queueing import StealEvent

if TYPE_CHECKING:
    from .workerpool import WorkerLoopStats


@dataclass(frozen=True)
class ChunkEvent:
    """One chunk acquisition: who got which task, when, how big."""

    seq_no: int
    size: int
    requester: int
    t_ns: float
    iteration: int = 0


@dataclass(frozen=True)
class ImbalanceStats:
    mean: float
    max: float
    cov: float
    percent_imbalance: float


@dataclass
class RunReport:
    """Everything measured in one repetition.

    makespan_ns and busy/idle are wall nanoseconds in real mode and
    abstract cost units in simulated mode (source tells them apart).
    For multi-iteration pipelines the traces and counters accumulate
    across iterations, so per-worker rows_processed sums to
    rows_total * iterations.
    """

    pipeline: str
    source: str
    config: SchedConfig
    rep: int
    makespan_ns: float
    worker_stats: list["WorkerLoopStats"]
    chunk_trace: list[ChunkEvent] = field(default_factory=list)
    steal_events: list[StealEvent] = field(default_factory=list)
    iterations: int = 1
    rows_total: int = 0
    task_results: Optional[dict] = field(default=None, repr=False)

    @property
    def steals(self) -> int:
        return len(self.steal_events)

    @property
    def chunks(self) -> int:
        return len(self.chunk_trace)


def imbalance(busy: Sequence[float]) -> ImbalanceStats:
    """Load-imbalance metrics over per-worker busy times.

    cov is population stdev over mean (the workers are the whole
    population, not a sample); percent_imbalance is max/mean - 1.
    """
    if len(busy) < 1:
        raise InvalidParams("imbalance needs at least one busy time")
    if any(t < 0 for t in busy):
        raise InvalidParams("busy times must be >= 0")
    mean = sum(busy) / len(busy)
    if mean == 0:
        raise DegenerateInput("imbalance undefined for zero mean busy time")
    var = sum((t - mean) ** 2 for t in busy) / len(busy)
    return ImbalanceStats(
        mean=mean,
        max=max(busy),
        cov=math.sqrt(var) / mean,
        percent_imbalance=max(busy) / mean - 1.0,
    )


SUMMARY_COLUMNS = [
    "pipeline",
    "scheme",
    "layout",
    "victim",
    "workers",
    "rep",
    "makespan_ns",
    "cov",
    "percent_imbalance",
    "steals",
    "chunks",
    "iterations",
    "source",
]


def _report_metrics(report: RunReport) -> tuple[float, float]:
    busy = [s.busy_ns for s in report.worker_stats]
    if not busy or sum(busy) == 0:
        return 0.0, 0.0
    stats = imbalance(busy)
    return stats.cov, stats.percent_imbalance


def _summary_row(report: RunReport) -> list:
    cov, pi = _report_metrics(report)
    cfg = report.config
    return [
        report.pipeline,
        cfg.scheme.name,
        cfg.layout.name,
        cfg.victim.name,
        cfg.topology.worker_count,
        report.rep,
        report.makespan_ns,
        cov,
        pi,
        report.steals,
        report.chunks,
        report.iterations,
        report.source,
    ]


def _open_sink(sink: Union[str, Path, IO]):
    if isinstance(sink, (str, Path)):
        return open(sink, "w", newline="", encoding="utf-8"), True
    return sink, False


def write_csv(reports: Sequence[RunReport], sink: Union[str, Path, IO]) -> int:
    """Write one summary row per report; returns the data row count."""
    fh, owned = _open_sink(sink)
    try:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for report in reports:
            writer.writerow(_summary_row(report))
    finally:
        if owned:
            fh.close()
    return len(reports)


def read_summary_csv(source: Union[str, Path, IO]) -> list[dict]:
    """Parse a summary CSV back into typed dicts (round-trip of write_csv)."""
    if isinstance(source, (str, Path)):
        fh, owned = open(source, "r", newline="", encoding="utf-8"), True
    else:
        fh, owned = source, False
    try:
        rows = []
        for raw in csv.DictReader(fh):
            rows.append(
                {
                    "pipeline": raw["pipeline"],
                    "scheme": raw["scheme"],
                    "layout": raw["layout"],
                    "victim": raw["victim"],
                    "workers": int(raw["workers"]),
                    "rep": int(raw["rep"]),
                    "makespan_ns": float(raw["makespan_ns"]),
                    "cov": float(raw["cov"]),
                    "percent_imbalance": float(raw["percent_imbalance"]),
                    "steals": int(raw["steals"]),
                    "chunks": int(raw["chunks"]),
                    "iterations": int(raw["iterations"]),
                    "source": raw["source"],
                }
            )
        return rows
    finally:
        if owned:
            fh.close()


CHUNK_COLUMNS = ["pipeline", "scheme", "layout", "workers", "rep", "iteration",
                 "seq_no", "size", "requester", "t_ns", "source"]

STEAL_COLUMNS = ["pipeline", "scheme", "layout", "victim", "workers", "rep",
                 "thief", "victim_queue", "task_seq", "attempt_count", "source"]


def write_chunk_csv(reports: Sequence[RunReport], sink: Union[str, Path, IO]) -> int:
    fh, owned = _open_sink(sink)
    rows = 0
    try:
        writer = csv.writer(fh)
        writer.writerow(CHUNK_COLUMNS)
        for r in reports:
            cfg = r.config
            for ev in r.chunk_trace:
                writer.writerow([r.pipeline, cfg.scheme.name, cfg.layout.name,
                                 cfg.topology.worker_count, r.rep, ev.iteration,
                                 ev.seq_no, ev.size, ev.requester, ev.t_ns, r.source])
                rows += 1
    finally:
        if owned:
            fh.close()
    return rows


def write_steal_csv(reports: Sequence[RunReport], sink: Union[str, Path, IO]) -> int:
    fh, owned = _open_sink(sink)
    rows = 0
    try:
        writer = csv.writer(fh)
        writer.writerow(STEAL_COLUMNS)
        for r in reports:
            cfg = r.config
            for ev in r.steal_events:
                writer.writerow([r.pipeline, cfg.scheme.name, cfg.layout.name,
                                 cfg.victim.name, cfg.topology.worker_count, r.rep,
                                 ev.thief, ev.victim_queue, ev.task_seq,
                                 ev.attempt_count, r.source])
                rows += 1
    finally:
        if owned:
            fh.close()
    return rows

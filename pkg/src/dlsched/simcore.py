"""Deterministic discrete-event simulation of the scheduler.

Time is exact rational arithmetic (costs become Fractions), so equal
times compare equal and runs are bit-reproducible.  Each chunk
acquisition is charged the fixed overhead h, each steal probe the
fixed steal latency; executing a task costs the sum of its rows'
costs.  Queue behavior (layouts, probe orders, steal ends) is the real
queueing module, driven single-threaded.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .core import InvalidParams, LayoutId, SchedConfig, SchemeId, SchemeParams, Topology, VictimStrategy
from .queueing import ProbeRecord, _first_occupied, build_queues, victim_probe_order
from .telemetry import ChunkEvent, RunReport
from .workerpool import WorkerLoopStats, thief_rng

TimeLike = Union[int, float, Fraction]


@dataclass(frozen=True)
class SimConfig:
    """Scheduling config plus the simulator's two overhead knobs."""

    sched: SchedConfig
    acquire_overhead: TimeLike = 0
    steal_latency: TimeLike = 0

    def __post_init__(self):
        if self.acquire_overhead < 0:
            raise InvalidParams(f"acquire_overhead must be >= 0, got {self.acquire_overhead}")
        if self.steal_latency < 0:
            raise InvalidParams(f"steal_latency must be >= 0, got {self.steal_latency}")


def simulate(
    cfg: SimConfig,
    costs: Sequence[float],
    pipeline: str = "synthetic",
    rep: int = 0,
) -> RunReport:
    """Run one configuration over a cost vector to completion.

    Event order: the worker with the smallest clock acts next, ties
    broken by worker id; a worker's queue pop takes effect at its
    acquisition instant, so later probes at the same instant see the
    updated queue.  Identical inputs give identical reports.
    """
    costs = np.asarray(costs, dtype=np.float64)
    n = len(costs)
    if n < 1:
        raise InvalidParams("need at least one task cost")
    if np.any(costs <= 0):
        raise InvalidParams("all task costs must be > 0")
    sched = cfg.sched
    topo = sched.topology
    w = topo.worker_count
    h = Fraction(cfg.acquire_overhead)
    lat = Fraction(cfg.steal_latency)

    # dyadic prefix sums: float costs are exact binary rationals, so
    # Fraction sums carry no rounding at all
    prefix = [Fraction(0)]
    for c in costs:
        prefix.append(prefix[-1] + Fraction(float(c)))

    def task_cost(task) -> Fraction:
        return prefix[task.rows.stop] - prefix[task.rows.start]

    qs = build_queues(sched, n, op_id="sim")
    clock = [Fraction(0) for _ in range(w)]
    busy = [Fraction(0) for _ in range(w)]
    stats = [WorkerLoopStats(i) for i in range(w)]
    trace: list[ChunkEvent] = []
    needs_rng = sched.victim in (VictimStrategy.RND, VictimStrategy.RNDPRI)
    rngs = [thief_rng(sched.rng_seed, i) if needs_rng else None for i in range(w)]
    queue_groups = [g if g is not None else 0 for g in qs.queue_groups]
    active = set(range(w))

    def execute(worker: int, task, start: Fraction) -> None:
        cost = task_cost(task)
        clock[worker] = start + h + cost
        busy[worker] += cost
        stats[worker].tasks_executed += 1
        stats[worker].rows_processed += task.rows.length
        trace.append(
            ChunkEvent(task.seq_no, task.rows.length, worker, float(start))
        )
        qs.task_done(task)

    while active:
        worker = min(active, key=lambda i: (clock[i], i))
        home = qs.owner_map[worker]
        if qs.queues[home]:
            task = qs.acquire(worker, block=False)
            execute(worker, task, clock[worker])
            continue
        if sched.layout is LayoutId.CENTRALIZED:
            # tasks are never re-enqueued, so an empty shared queue is final
            active.discard(worker)
            continue
        stats[worker].steal_attempts += 1
        occ = qs.occupancy()
        order = victim_probe_order(
            sched.victim, worker, topo, len(qs.queues), rngs[worker],
            home=home, queue_groups=queue_groups,
        )
        victim, probes = _first_occupied(order, occ)
        qs.probe_log.append(ProbeRecord(worker, home, tuple(occ), tuple(order), victim))
        clock[worker] += probes * lat
        if victim is None:
            active.discard(worker)
            continue
        task = qs.steal(worker, victim, probes)
        stats[worker].steals_done += 1
        execute(worker, task, clock[worker])

    for i in range(w):
        stats[i].busy_ns = float(busy[i])
        stats[i].idle_ns = float(clock[i] - busy[i])
    makespan = max(clock)
    return RunReport(
        pipeline=pipeline,
        source="sim",
        config=sched,
        rep=rep,
        makespan_ns=float(makespan),
        worker_stats=stats,
        chunk_trace=trace,
        steal_events=list(qs.steal_events),
        iterations=1,
        rows_total=n,
    )


def sweep(
    schemes: Sequence[SchemeId],
    layouts: Sequence[LayoutId],
    victims: Sequence[VictimStrategy],
    worker_counts: Sequence[int],
    scenarios: Sequence[tuple[str, Sequence[float]]],
    acquire_overhead: TimeLike = 0,
    steal_latency: TimeLike = 0,
    group_count: int = 1,
    rng_seed: int = 0,
    min_chunk: int = 1,
    params: Optional[SchemeParams] = None,
) -> list[RunReport]:
    """Evaluate the full cross product; output ordered by grid position."""
    reports = []
    grid = itertools.product(schemes, layouts, victims, worker_counts, scenarios)
    for scheme, layout, victim, workers, (name, costs) in grid:
        if workers % group_count:
            raise InvalidParams(
                f"worker count {workers} not divisible into {group_count} groups"
            )
        topo = (
            Topology.single_group(workers)
            if group_count == 1
            else Topology.grouped(group_count, workers // group_count)
        )
        sched = SchedConfig(
            scheme=scheme,
            layout=layout,
            victim=victim,
            topology=topo,
            min_chunk=min_chunk,
            params=params if params is not None else SchemeParams(),
            rng_seed=rng_seed,
        )
        reports.append(simulate(SimConfig(sched, acquire_overhead, steal_latency), costs, pipeline=name))
    return reports

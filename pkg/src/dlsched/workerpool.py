"""Threaded worker pool running the self-schedule / steal / finish loop.

One thread per worker.  A worker pops its home queue until empty, then
(under a stealable layout) runs victim-selection rounds, executing each
stolen task immediately.  Stats and traces are worker-private during
the run and merged after all threads join, so the hot loop takes no
locks beyond the queue's own.
"""

from __future__ import annotations

import enum
import os
import random
import threading
import time
from dataclasses import dataclass
from typing import Callable, Optional

from .core import InvalidCore, SchedConfig, Task, VictimStrategy, WorkerPanic
from .queueing import DONE, NEED_STEAL, QueueSystem
from .telemetry import ChunkEvent, RunReport


@dataclass
class WorkerLoopStats:
    worker: int
    busy_ns: float = 0
    idle_ns: float = 0
    tasks_executed: int = 0
    rows_processed: int = 0
    steals_done: int = 0
    steal_attempts: int = 0


class PinResult(enum.Enum):
    OK = "OK"
    UNSUPPORTED = "UNSUPPORTED"


def pin_worker(worker: int, core: int) -> PinResult:
    """Pin the calling thread to one logical core.

    Returns UNSUPPORTED (and the run proceeds unpinned) on platforms
    without affinity control; raises InvalidCore for a core id the host
    does not have.
    """
    if not hasattr(os, "sched_setaffinity"):
        return PinResult.UNSUPPORTED
    n = os.cpu_count() or 1
    if not 0 <= core < n:
        raise InvalidCore(f"core {core} does not exist (host has {n})")
    try:
        os.sched_setaffinity(0, {core})
    except OSError as exc:
        raise InvalidCore(f"cannot pin worker {worker} to core {core}: {exc}") from exc
    return PinResult.OK


def thief_rng(rng_seed: int, worker: int) -> random.Random:
    """Per-thief generator; string seeding is stable across platforms."""
    return random.Random(f"{rng_seed}:{worker}")


class _PoolRun:
    def __init__(self, cfg: SchedConfig, qs: QueueSystem, kernel, iteration: int):
        self.cfg = cfg
        self.qs = qs
        self.kernel = kernel
        self.iteration = iteration
        w = cfg.topology.worker_count
        self.stats = [WorkerLoopStats(i) for i in range(w)]
        self.traces: list[list[ChunkEvent]] = [[] for _ in range(w)]
        self.results: list[dict] = [{} for _ in range(w)]
        self.abort = threading.Event()
        self.errors: list[tuple[int, BaseException]] = []
        self.err_lock = threading.Lock()
        self.t0 = 0

    def worker_body(self, worker: int) -> None:
        cfg, qs = self.cfg, self.qs
        stats = self.stats[worker]
        needs_rng = cfg.victim in (VictimStrategy.RND, VictimStrategy.RNDPRI)
        rng = thief_rng(cfg.rng_seed, worker) if needs_rng else None
        if cfg.topology.pin_map is not None:
            pin_worker(worker, cfg.topology.pin_map[worker])
        loop_start = time.monotonic_ns()
        backoff = 1e-6
        while not self.abort.is_set():
            got = qs.acquire(worker)
            if got is DONE:
                break
            if got is NEED_STEAL:
                stats.steal_attempts += 1
                task = qs.steal_attempt(worker, rng)
                if task is None:
                    # nothing stealable right now; in-flight tasks may still
                    # finish elsewhere, so back off and re-check
                    time.sleep(backoff)
                    backoff = min(backoff * 2.0, 1e-3)
                    continue
                stats.steals_done += 1
            else:
                task = got
            backoff = 1e-6
            self.execute(worker, task)
        stats.idle_ns = max(0, time.monotonic_ns() - loop_start - stats.busy_ns)

    def execute(self, worker: int, task: Task) -> None:
        stats = self.stats[worker]
        t_start = time.monotonic_ns()
        result = self.kernel(task)
        stats.busy_ns += time.monotonic_ns() - t_start
        stats.tasks_executed += 1
        stats.rows_processed += task.rows.length
        self.traces[worker].append(
            ChunkEvent(task.seq_no, task.rows.length, worker, t_start - self.t0, self.iteration)
        )
        self.results[worker][task.seq_no] = result
        self.qs.task_done(task)

    def worker_entry(self, worker: int) -> None:
        try:
            self.worker_body(worker)
        except BaseException as exc:
            with self.err_lock:
                self.errors.append((worker, exc))
            self.abort.set()
            self.qs.abort()


def run_pool(
    cfg: SchedConfig,
    qs: QueueSystem,
    kernel: Callable[[Task], object],
    pipeline: str = "synthetic",
    rep: int = 0,
    iteration: int = 0,
) -> RunReport:
    """Execute every queued task once across W threads; gather telemetry.

    The kernel must confine its writes to the task's row range; results
    it returns are collected per seq_no for ordered reduction by the
    caller.  The first worker exception aborts the run and surfaces as
    WorkerPanic with the partial report attached.
    """
    topo = cfg.topology
    if topo.pin_map is not None:
        n = os.cpu_count() or 1
        for core in topo.pin_map:
            if hasattr(os, "sched_setaffinity") and not 0 <= core < n:
                raise InvalidCore(f"pin map names core {core}; host has {n}")
    run = _PoolRun(cfg, qs, kernel, iteration)
    run.t0 = time.monotonic_ns()
    threads = [
        threading.Thread(target=run.worker_entry, args=(w,), name=f"dlsched-w{w}")
        for w in range(topo.worker_count)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    makespan = time.monotonic_ns() - run.t0

    merged_trace = sorted(
        (ev for per_worker in run.traces for ev in per_worker), key=lambda e: e.t_ns
    )
    merged_results: dict = {}
    for per_worker in run.results:
        merged_results.update(per_worker)
    report = RunReport(
        pipeline=pipeline,
        source="real",
        config=cfg,
        rep=rep,
        makespan_ns=makespan,
        worker_stats=run.stats,
        chunk_trace=merged_trace,
        steal_events=list(qs.steal_events),
        iterations=1,
        rows_total=qs.total_rows,
        task_results=merged_results,
    )
    if run.errors:
        worker, cause = run.errors[0]
        raise WorkerPanic(f"worker {worker} failed: {cause!r}", cause=cause, report=report)
    return report

"""The two evaluation pipelines: connected components and ridge-regularized
linear regression, both expressed as row-blocked kernels over the runtime.

Scheduling must never change numerical results, so the kernels are
built order-independent: label propagation is double-buffered (each
pass reads only the previous pass's labels), and Gram partials are
reduced in task seq_no order after each phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import InvalidParams, NotConverged, RowRange, SchedConfig, SingularSystem, Task
from .data import CsrMatrix
from .queueing import build_queues
from .telemetry import RunReport
from .workerpool import run_pool

# LabelVector: int64 array, labels[i] = current component label of node i
LabelVector = np.ndarray


@dataclass(frozen=True)
class RegressionModel:
    coefficients: np.ndarray
    ridge_lambda: float


def cc_iterate_block(
    csr: CsrMatrix, rows: RowRange, labels_in: LabelVector, labels_out: LabelVector
) -> int:
    """One min-label propagation step over a row block.

    labels_out[i] = min(labels_in[i], min of neighbors' labels_in) for
    every i in the block; rows outside the block are untouched.
    Returns how many labels changed.
    """
    s, e = rows.start, rows.stop
    if e > csr.n:
        raise InvalidParams(f"row range [{s}, {e}) exceeds node count {csr.n}")
    rp = csr.row_ptr
    old = labels_in[s:e]
    new = old.copy()
    seg = labels_in[csr.col_idx[rp[s] : rp[e]]]
    if seg.size:
        degs = np.diff(rp[s : e + 1])
        nonempty = degs > 0
        # empty rows contribute zero-length gaps between consecutive
        # starts, which reduceat folds into the preceding segment; that
        # is exactly the per-row minimum for the non-empty rows
        starts = (rp[s:e] - rp[s])[nonempty]
        mins = np.minimum.reduceat(seg, starts)
        new[nonempty] = np.minimum(old[nonempty], mins)
    labels_out[s:e] = new
    return int(np.count_nonzero(new != old))


def _cc_phase(csr: CsrMatrix, cfg: SchedConfig, labels: LabelVector, iteration: int, rep: int):
    out = np.empty_like(labels)
    qs = build_queues(cfg, csr.n, op_id="cc_iterate")

    def kernel(task: Task) -> int:
        return cc_iterate_block(csr, task.rows, labels, out)

    report = run_pool(cfg, qs, kernel, pipeline="cc", rep=rep, iteration=iteration)
    changed = sum(report.task_results[k] for k in sorted(report.task_results))
    return out, changed, report


def connected_components(
    csr: CsrMatrix,
    cfg: SchedConfig,
    max_iters: Optional[int] = None,
    rep: int = 0,
    collect: Optional[list[RunReport]] = None,
) -> tuple[LabelVector, int]:
    """Jacobi min-label propagation to a fixpoint.

    Labels start as node ids; each pass runs the block kernel through
    the scheduler with double-buffered labels.  Iterations include the
    final confirming pass that observes zero changes.  Requires a
    symmetrized graph for the same-label = same-component guarantee.
    """
    n = csr.n
    if n < 1:
        raise InvalidParams("connected components needs n >= 1")
    if max_iters is None:
        max_iters = n + 1
    if max_iters < 1:
        raise InvalidParams(f"max_iters must be >= 1, got {max_iters}")
    labels = np.arange(n, dtype=np.int64)
    iterations = 0
    while True:
        labels, changed, report = _cc_phase(csr, cfg, labels, iterations, rep)
        iterations += 1
        if collect is not None:
            collect.append(report)
        if changed == 0:
            return labels, iterations
        if iterations >= max_iters:
            exc = NotConverged(f"still {changed} label changes after {iterations} passes")
            exc.labels = labels
            exc.iterations = iterations
            raise exc


def connected_components_run(
    csr: CsrMatrix, cfg: SchedConfig, max_iters: Optional[int] = None, rep: int = 0
) -> tuple[LabelVector, int, RunReport]:
    """connected_components plus a merged per-repetition report."""
    phases: list[RunReport] = []
    labels, iterations = connected_components(csr, cfg, max_iters, rep, collect=phases)
    merged = _merge_phase_reports(phases, iterations, rows_total=csr.n)
    return labels, iterations, merged


def _merge_phase_reports(phases: list[RunReport], iterations: int, rows_total: int) -> RunReport:
    first = phases[0]
    stats = [type(s)(s.worker) for s in first.worker_stats]
    for ph in phases:
        for agg, s in zip(stats, ph.worker_stats):
            agg.busy_ns += s.busy_ns
            agg.idle_ns += s.idle_ns
            agg.tasks_executed += s.tasks_executed
            agg.rows_processed += s.rows_processed
            agg.steals_done += s.steals_done
            agg.steal_attempts += s.steal_attempts
    return RunReport(
        pipeline=first.pipeline,
        source=first.source,
        config=first.config,
        rep=first.rep,
        makespan_ns=sum(ph.makespan_ns for ph in phases),
        worker_stats=stats,
        chunk_trace=[ev for ph in phases for ev in ph.chunk_trace],
        steal_events=[ev for ph in phases for ev in ph.steal_events],
        iterations=iterations,
        rows_total=rows_total,
    )


def cc_serial(csr: CsrMatrix, max_iters: Optional[int] = None) -> tuple[LabelVector, int]:
    """Single-threaded fixpoint, same kernel, no scheduler; for sim mode."""
    n = csr.n
    if n < 1:
        raise InvalidParams("connected components needs n >= 1")
    if max_iters is None:
        max_iters = n + 1
    labels = np.arange(n, dtype=np.int64)
    iterations = 0
    while True:
        out = np.empty_like(labels)
        changed = cc_iterate_block(csr, RowRange(0, n), labels, out)
        labels = out
        iterations += 1
        if changed == 0:
            return labels, iterations
        if iterations >= max_iters:
            exc = NotConverged(f"still {changed} label changes after {iterations} passes")
            exc.labels = labels
            exc.iterations = iterations
            raise exc


def gram_block(features: np.ndarray, targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Partial normal equations for one row block: (X_b' X_b, X_b' y_b)."""
    return features.T @ features, features.T @ targets


def solve_spd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve A x = b for symmetric positive definite A.

    Cholesky factorization with forward/backward substitution.  A pivot
    at or below 1e-12 means A is not positive definite at working
    precision.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidParams(f"matrix must be square, got shape {a.shape}")
    m = a.shape[0]
    if b.shape != (m,):
        raise InvalidParams(f"rhs shape {b.shape} does not match matrix order {m}")
    low = np.zeros((m, m), dtype=np.float64)
    for k in range(m):
        pivot = a[k, k] - np.dot(low[k, :k], low[k, :k])
        if pivot <= 1e-12:
            raise SingularSystem(f"non-positive pivot {pivot:.3e} at column {k}")
        low[k, k] = math.sqrt(pivot)
        if k + 1 < m:
            low[k + 1 :, k] = (a[k + 1 :, k] - low[k + 1 :, :k] @ low[k, :k]) / low[k, k]
    y = np.zeros(m, dtype=np.float64)
    for i in range(m):
        y[i] = (b[i] - np.dot(low[i, :i], y[:i])) / low[i, i]
    x = np.zeros(m, dtype=np.float64)
    for i in range(m - 1, -1, -1):
        x[i] = (y[i] - np.dot(low[i + 1 :, i], x[i + 1 :])) / low[i, i]
    return x


def linreg_train(
    xy: np.ndarray, ridge_lambda: float, cfg: SchedConfig, rep: int = 0
) -> RegressionModel:
    """Train (X'X + lambda I) beta = X'y with scheduled Gram partials.

    The last column of xy is the target; the rest are features.  Gram
    partials from row-block tasks are accumulated in ascending seq_no
    order, making beta independent of scheduling.
    """
    model, _ = linreg_train_run(xy, ridge_lambda, cfg, rep)
    return model


def linreg_train_run(
    xy: np.ndarray, ridge_lambda: float, cfg: SchedConfig, rep: int = 0
) -> tuple[RegressionModel, RunReport]:
    xy = np.asarray(xy, dtype=np.float64)
    if xy.ndim != 2 or xy.shape[1] < 2:
        raise InvalidParams(f"need a 2-D matrix with >= 2 columns, got shape {xy.shape}")
    r, m = xy.shape
    d = m - 1
    if r < d:
        raise InvalidParams(f"need at least {d} rows for {d} features, got {r}")
    if ridge_lambda < 0:
        raise InvalidParams(f"ridge lambda must be >= 0, got {ridge_lambda}")
    features, targets = xy[:, :d], xy[:, d]
    qs = build_queues(cfg, r, op_id="gram")

    def kernel(task: Task):
        s, e = task.rows.start, task.rows.stop
        return gram_block(features[s:e], targets[s:e])

    report = run_pool(cfg, qs, kernel, pipeline="linreg", rep=rep)
    gram = np.zeros((d, d), dtype=np.float64)
    rhs = np.zeros(d, dtype=np.float64)
    for seq in sorted(report.task_results):
        a_part, b_part = report.task_results[seq]
        gram += a_part
        rhs += b_part
    gram[np.diag_indices(d)] += ridge_lambda
    beta = solve_spd(gram, rhs)
    return RegressionModel(beta, ridge_lambda), report

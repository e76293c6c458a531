"""Experiment driver: pick a pipeline, a scheduling strategy, and a mode,
run repetitions, print a comparison table, optionally write CSV.

Exit codes: 0 success, 2 bad arguments, 3 input/output failure,
4 kernel failure (no convergence, singular system, worker crash).
"""

from __future__ import annotations

import argparse
import gzip
import os
import sys
import time
from typing import Optional

import numpy as np

from .core import (
    InvalidConfig,
    InvalidCore,
    InvalidParams,
    LayoutId,
    NotConverged,
    ParseError,
    SchedConfig,
    SchemeId,
    SchemeParams,
    SingularSystem,
    Topology,
    UnknownScheme,
    VictimStrategy,
    WorkerPanic,
    parse_layout,
    parse_scheme,
    parse_victim,
)
from .data import build_csr, gen_costs, gen_graph, parse_edge_list, scale_up, symmetrize_dedup
from .pipelines import cc_serial, connected_components_run, linreg_train_run, solve_spd
from .queueing import build_queues
from .simcore import SimConfig, simulate
from .telemetry import RunReport, write_chunk_csv, write_csv, write_steal_csv
from .workerpool import run_pool

_SCHEME_NAMES = ", ".join(m.name for m in SchemeId)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="dlsched",
        description="Benchmark driver for the self-scheduling task runtime.",
        epilog=(
            f"schemes: {_SCHEME_NAMES}. "
            f"layouts: {', '.join(m.name for m in LayoutId)}. "
            f"victim strategies: {', '.join(m.name for m in VictimStrategy)}."
        ),
    )
    p.add_argument("--pipeline", required=True, choices=["cc", "linreg", "synthetic"])
    p.add_argument("--mode", choices=["real", "sim"], default="real")
    p.add_argument(
        "--scheme",
        default="STATIC",
        help=f"comma-separated list or 'all'; one of: {_SCHEME_NAMES}",
    )
    p.add_argument("--layout", choices=[m.name for m in LayoutId], default="CENTRALIZED")
    p.add_argument("--victim", choices=[m.name for m in VictimStrategy], default="SEQ")
    p.add_argument("--workers", type=int, default=None, help="worker thread count (default 4)")
    p.add_argument("--groups", default=None, help="GxS spec, e.g. 2x4 = 2 groups of 4 workers")
    p.add_argument("--pin", action="store_true", help="pin workers to cores (real mode)")
    p.add_argument("--input", default=None, help="edge-list path for cc (.gz accepted)")
    p.add_argument("--gen", default=None,
                   help="graph generator spec for cc: rmat:N | path:N | complete:N | components:s1,s2,...")
    p.add_argument("--scale-factor", type=int, default=1, help="block-diagonal graph replication")
    p.add_argument("--lambda", dest="ridge_lambda", type=float, default=0.001)
    p.add_argument("--rows", type=int, default=None, help="linreg matrix rows (default 256)")
    p.add_argument("--cols", type=int, default=None, help="linreg matrix cols incl. target (default 8)")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", default=None, help="summary CSV output path")
    p.add_argument("--chunk-csv", default=None, help="per-chunk detail CSV path")
    p.add_argument("--steal-csv", default=None, help="per-steal detail CSV path")
    p.add_argument("--min-chunk", type=int, default=1)
    p.add_argument("--max-iters", type=int, default=None, help="cc iteration cap")
    p.add_argument("--fiss-stages", type=int, default=None)
    p.add_argument("--pls-swr", type=float, default=None)
    p.add_argument("--pss-factor", type=float, default=None)
    p.add_argument("--tss-last", type=int, default=None)
    p.add_argument("--tasks", type=int, default=2000, help="synthetic task count")
    p.add_argument("--cost-dist", choices=["uniform", "pareto"], default="pareto",
                   help="synthetic cost distribution")
    p.add_argument("--cost-shape", type=float, default=1.5, help="pareto shape")
    p.add_argument("--cost-low", type=float, default=1.0)
    p.add_argument("--cost-high", type=float, default=None, help="default: same as --cost-low")
    p.add_argument("--cost-unit-ns", type=int, default=20000,
                   help="real-mode synthetic kernel: nanoseconds per unit cost")
    p.add_argument("--acquire-overhead", type=float, default=0.0, help="sim: cost h per acquisition")
    p.add_argument("--steal-latency", type=float, default=0.0, help="sim: cost per steal probe")
    return p


def _parse_schemes(text: str) -> list[SchemeId]:
    if text.strip().lower() == "all":
        return list(SchemeId)
    out: list[SchemeId] = []
    for name in text.split(","):
        s = parse_scheme(name)
        if s not in out:
            out.append(s)
    return out


def _parse_groups(spec: str) -> tuple[int, int]:
    parts = spec.lower().split("x")
    if len(parts) != 2:
        raise InvalidConfig(f"groups spec must look like 2x4, got {spec!r}")
    try:
        g, s = int(parts[0]), int(parts[1])
    except ValueError:
        raise InvalidConfig(f"groups spec must be INTxINT, got {spec!r}") from None
    if g < 1 or s < 1:
        raise InvalidConfig(f"groups spec needs positive counts, got {spec!r}")
    return g, s


def _make_topology(args) -> Topology:
    pin_map = None
    if args.groups is not None:
        g, s = _parse_groups(args.groups)
        workers = g * s
        if args.workers is not None and args.workers != workers:
            raise InvalidConfig(
                f"--workers {args.workers} conflicts with --groups {args.groups} ({workers} workers)"
            )
        if args.pin:
            pin_map = _default_pin_map(workers)
        return Topology.grouped(g, s, pin_map)
    workers = args.workers if args.workers is not None else 4
    if workers < 1:
        raise InvalidConfig(f"--workers must be >= 1, got {workers}")
    if args.pin:
        pin_map = _default_pin_map(workers)
    return Topology.single_group(workers, pin_map)


def _default_pin_map(workers: int) -> tuple[int, ...]:
    n = os.cpu_count() or 1
    return tuple(i % n for i in range(workers))


def _scheme_params(args) -> SchemeParams:
    base = SchemeParams()
    return SchemeParams(
        fiss_stages=args.fiss_stages if args.fiss_stages is not None else base.fiss_stages,
        pls_swr=args.pls_swr if args.pls_swr is not None else base.pls_swr,
        pss_factor=args.pss_factor if args.pss_factor is not None else base.pss_factor,
        tss_last=args.tss_last if args.tss_last is not None else base.tss_last,
    )


def _parse_gen_spec(spec: str):
    kind, _, arg = spec.partition(":")
    kind = kind.strip().lower()
    if kind == "components":
        if not arg:
            raise InvalidParams("components spec needs sizes, e.g. components:3,1")
        sizes = [int(tok) for tok in arg.split(",")]
        return kind, {"sizes": sizes}
    if kind in ("rmat", "path", "complete"):
        if not arg:
            raise InvalidParams(f"{kind} spec needs a node count, e.g. {kind}:1024")
        return kind, {"n": int(arg)}
    raise InvalidParams(f"unknown generator kind {kind!r}")


def _load_graph(args):
    if args.input is not None:
        opener = gzip.open if args.input.endswith(".gz") else open
        with opener(args.input, "rt", encoding="utf-8") as fh:
            edges = parse_edge_list(fh)
    else:
        spec = args.gen if args.gen is not None else "rmat:1024"
        kind, kw = _parse_gen_spec(spec)
        edges = gen_graph(kind, seed=args.seed, **kw)
    edges = symmetrize_dedup(edges)
    if args.scale_factor > 1:
        edges = scale_up(edges, args.scale_factor)
    return build_csr(edges)


def _make_costs(args, count: int) -> np.ndarray:
    if args.cost_dist == "pareto":
        return gen_costs("pareto", count, seed=args.seed, shape=args.cost_shape)
    high = args.cost_high if args.cost_high is not None else args.cost_low
    return gen_costs("uniform", count, seed=args.seed, low=args.cost_low, high=high)


def _run_cc(args, cfg: SchedConfig) -> tuple[list[RunReport], str]:
    csr = _load_graph(args)
    if csr.n < 1:
        raise InvalidParams("graph is empty; nothing to schedule")
    if args.mode == "sim":
        labels, iterations = cc_serial(csr, args.max_iters)
        costs = csr.degrees().astype(np.float64) + 1.0
        reports = []
        for rep in range(args.reps):
            r = simulate(
                SimConfig(cfg, args.acquire_overhead, args.steal_latency),
                costs,
                pipeline="cc",
                rep=rep,
            )
            r.iterations = iterations
            reports.append(r)
    else:
        reports = []
        for rep in range(args.reps):
            labels, iterations, report = connected_components_run(csr, cfg, args.max_iters, rep)
            reports.append(report)
    components = len(np.unique(labels))
    return reports, f"n={csr.n} nnz={csr.nnz} components={components} iterations={iterations}"


def _run_linreg(args, cfg: SchedConfig) -> tuple[list[RunReport], str]:
    rows = args.rows if args.rows is not None else 256
    cols = args.cols if args.cols is not None else 8
    if cols < 2 or rows < cols - 1:
        raise InvalidParams(f"need cols >= 2 and rows >= cols-1, got {rows}x{cols}")
    rng = np.random.default_rng(args.seed)
    xy = rng.standard_normal((rows, cols))
    if args.mode == "sim":
        d = cols - 1
        features, targets = xy[:, :d], xy[:, d]
        gram = features.T @ features
        gram[np.diag_indices(d)] += args.ridge_lambda
        beta = solve_spd(gram, features.T @ targets)
        costs = np.full(rows, float(cols))
        reports = [
            simulate(SimConfig(cfg, args.acquire_overhead, args.steal_latency),
                     costs, pipeline="linreg", rep=rep)
            for rep in range(args.reps)
        ]
    else:
        reports = []
        for rep in range(args.reps):
            model, report = linreg_train_run(xy, args.ridge_lambda, cfg, rep)
            reports.append(report)
        beta = model.coefficients
    head = np.array2string(beta[:4], precision=6)
    return reports, f"rows={rows} cols={cols} lambda={args.ridge_lambda} beta[:4]={head}"


def _run_synthetic(args, cfg: SchedConfig) -> tuple[list[RunReport], str]:
    if args.tasks < 1:
        raise InvalidParams(f"--tasks must be >= 1, got {args.tasks}")
    costs = _make_costs(args, args.tasks)
    if args.mode == "sim":
        reports = [
            simulate(SimConfig(cfg, args.acquire_overhead, args.steal_latency),
                     costs, pipeline="synthetic", rep=rep)
            for rep in range(args.reps)
        ]
    else:
        prefix = np.concatenate([[0.0], np.cumsum(costs)])
        unit = args.cost_unit_ns

        def kernel(task):
            span = prefix[task.rows.stop] - prefix[task.rows.start]
            deadline = time.monotonic_ns() + int(span * unit)
            while time.monotonic_ns() < deadline:
                pass
            return None

        reports = []
        for rep in range(args.reps):
            qs = build_queues(cfg, args.tasks, op_id="synthetic")
            reports.append(run_pool(cfg, qs, kernel, pipeline="synthetic", rep=rep))
    return reports, f"tasks={args.tasks} dist={args.cost_dist} total_cost={costs.sum():.1f}"


def _print_table(all_reports: dict[SchemeId, list[RunReport]], mode: str) -> None:
    means = {s: sum(r.makespan_ns for r in reps) / len(reps) for s, reps in all_reports.items()}
    static_mean = means.get(SchemeId.STATIC)
    unit = "ns" if mode == "real" else "cost"
    print(f"{'scheme':<8} {'mean makespan (' + unit + ')':>22} {'gain vs STATIC':>15} {'steals':>7}")
    for scheme, reps in all_reports.items():
        mean = means[scheme]
        if static_mean is None or static_mean == 0:
            gain = "n/a"
        else:
            gain = f"{(static_mean - mean) / static_mean * 100.0:+.1f}%"
        steals = sum(r.steals for r in reps) / len(reps)
        print(f"{scheme.name:<8} {mean:>22.1f} {gain:>15} {steals:>7.1f}")


def run_experiment(args) -> int:
    schemes = _parse_schemes(args.scheme)
    if args.mode == "sim" and args.pin:
        raise InvalidConfig("--pin has no effect in sim mode; drop one of the flags")
    if args.input is not None and args.pipeline != "cc":
        raise InvalidConfig("--input is only valid with --pipeline cc")
    if args.gen is not None and args.pipeline != "cc":
        raise InvalidConfig("--gen is only valid with --pipeline cc; linreg takes --rows/--cols")
    if args.scale_factor != 1 and args.pipeline != "cc":
        raise InvalidConfig("--scale-factor is only valid with --pipeline cc")
    if args.reps < 1:
        raise InvalidConfig(f"--reps must be >= 1, got {args.reps}")
    if args.min_chunk < 1:
        raise InvalidConfig(f"--min-chunk must be >= 1, got {args.min_chunk}")
    topology = _make_topology(args)
    params = _scheme_params(args)

    runner = {"cc": _run_cc, "linreg": _run_linreg, "synthetic": _run_synthetic}[args.pipeline]
    all_reports: dict[SchemeId, list[RunReport]] = {}
    summary = ""
    for scheme in schemes:
        cfg = SchedConfig(
            scheme=scheme,
            layout=parse_layout(args.layout),
            victim=parse_victim(args.victim),
            topology=topology,
            min_chunk=args.min_chunk,
            params=params,
            rng_seed=args.seed,
        )
        reports, summary = runner(args, cfg)
        all_reports[scheme] = reports

    print(
        f"pipeline={args.pipeline} mode={args.mode} layout={args.layout} "
        f"victim={args.victim} workers={topology.worker_count} reps={args.reps}"
    )
    print(summary)
    _print_table(all_reports, args.mode)

    flat = [r for reps in all_reports.values() for r in reps]
    if args.csv:
        write_csv(flat, args.csv)
        print(f"wrote {len(flat)} rows to {args.csv}")
    if args.chunk_csv:
        write_chunk_csv(flat, args.chunk_csv)
    if args.steal_csv:
        write_steal_csv(flat, args.steal_csv)
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return run_experiment(args)
    except (UnknownScheme, InvalidParams, InvalidConfig, InvalidCore) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ParseError, OSError) as exc:
        print(f"input/output error: {exc}", file=sys.stderr)
        return 3
    except (NotConverged, SingularSystem, WorkerPanic) as exc:
        print(f"kernel failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())

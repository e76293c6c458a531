import gzip
import re

import numpy as np
import pytest

from dlsched.cli import main
from dlsched.core import LayoutId, SchemeId, VictimStrategy
from dlsched.telemetry import read_summary_csv


def run(*argv):
    return main(list(argv))


# -- argument validation (exit 2) -------------------------------------------------


def test_unknown_scheme_exits_2(capsys):
    assert run("--pipeline", "cc", "--scheme", "FOO") == 2
    err = capsys.readouterr().err
    assert "FOO" in err
    assert "GSS" in err  # the message lists the valid names


def test_bad_layout_choice_exits_2(capsys):
    assert run("--pipeline", "cc", "--layout", "BOGUS") == 2


def test_input_requires_cc_pipeline(capsys):
    assert run("--pipeline", "linreg", "--input", "x.txt") == 2


def test_gen_requires_cc_pipeline(capsys):
    assert run("--pipeline", "linreg", "--gen", "rmat:64") == 2
    assert "--rows" in capsys.readouterr().err


def test_scale_factor_requires_cc_pipeline(capsys):
    assert run("--pipeline", "synthetic", "--mode", "sim", "--scale-factor", "2") == 2


def test_pin_forbidden_in_sim_mode(capsys):
    assert run("--pipeline", "cc", "--mode", "sim", "--pin") == 2


def test_workers_groups_conflict(capsys):
    assert run("--pipeline", "cc", "--groups", "2x4", "--workers", "5") == 2


def test_malformed_groups_spec(capsys):
    assert run("--pipeline", "cc", "--groups", "2by4") == 2


def test_bad_generator_spec(capsys):
    assert run("--pipeline", "cc", "--gen", "torus:9") == 2


def test_nonpositive_reps_and_min_chunk(capsys):
    assert run("--pipeline", "cc", "--gen", "path:4", "--reps", "0") == 2
    assert run("--pipeline", "cc", "--gen", "path:4", "--min-chunk", "0") == 2


# -- IO failures (exit 3) ----------------------------------------------------------


def test_missing_input_file_exits_3(capsys):
    assert run("--pipeline", "cc", "--input", "/no/such/file.txt") == 3


def test_malformed_edge_list_exits_3(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("0 1\nnot numbers\n")
    assert run("--pipeline", "cc", "--input", str(bad), "--reps", "1") == 3
    assert "line 2" in capsys.readouterr().err


# -- kernel failures (exit 4) --------------------------------------------------------


def test_unconverged_cc_exits_4(capsys):
    code = run(
        "--pipeline", "cc", "--mode", "real", "--gen", "path:64",
        "--workers", "1", "--max-iters", "2", "--reps", "1",
    )
    assert code == 4
    assert "kernel failure" in capsys.readouterr().err


# -- end-to-end happy paths ----------------------------------------------------------


def test_cc_sim_smallest_path(tmp_path, capsys):
    csv = tmp_path / "out.csv"
    code = run(
        "--pipeline", "cc", "--mode", "sim", "--scheme", "GSS",
        "--layout", "CENTRALIZED", "--workers", "4",
        "--gen", "components:3,1", "--csv", str(csv),
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "components=2" in out
    assert "iterations=3" in out
    rows = read_summary_csv(csv)
    assert len(rows) == 5  # default reps
    assert {r["rep"] for r in rows} == {0, 1, 2, 3, 4}
    assert all(r["source"] == "sim" for r in rows)
    assert all(r["scheme"] == "GSS" for r in rows)


def test_cc_real_on_generated_path(capsys):
    code = run(
        "--pipeline", "cc", "--mode", "real", "--scheme", "SS",
        "--workers", "2", "--gen", "path:16", "--reps", "1",
    )
    assert code == 0
    assert "components=1" in capsys.readouterr().out


def test_cc_reads_edge_list_file(tmp_path, capsys):
    graph = tmp_path / "g.txt"
    graph.write_text("# tiny graph\n0 1\n1 2\n4 5\n")
    code = run(
        "--pipeline", "cc", "--mode", "real", "--scheme", "STATIC",
        "--workers", "1", "--input", str(graph), "--reps", "1",
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "n=6" in out
    assert "components=3" in out  # {0,1,2}, {3}, {4,5}


def test_cc_reads_gzipped_edge_list(tmp_path, capsys):
    graph = tmp_path / "g.txt.gz"
    with gzip.open(graph, "wt") as fh:
        fh.write("0 1\n2 3\n")
    code = run(
        "--pipeline", "cc", "--mode", "real", "--scheme", "STATIC",
        "--workers", "1", "--input", str(graph), "--reps", "1",
    )
    assert code == 0
    assert "components=2" in capsys.readouterr().out


def test_scale_factor_multiplies_nodes(capsys):
    code = run(
        "--pipeline", "cc", "--mode", "sim", "--gen", "path:10",
        "--scale-factor", "3", "--reps", "1",
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "n=30" in out
    assert "components=3" in out


def test_linreg_real_beta_matches_direct_solve(capsys):
    code = run(
        "--pipeline", "linreg", "--mode", "real", "--scheme", "STATIC",
        "--workers", "2", "--rows", "64", "--cols", "3",
        "--lambda", "0", "--seed", "7", "--reps", "1",
    )
    assert code == 0
    out = capsys.readouterr().out
    match = re.search(r"beta\[:4\]=\[([^\]]+)\]", out)
    assert match, out
    printed = np.array([float(tok) for tok in match.group(1).split()])
    rng = np.random.default_rng(7)
    xy = rng.standard_normal((64, 3))
    x, y = xy[:, :2], xy[:, 2]
    direct = np.linalg.solve(x.T @ x, x.T @ y)
    np.testing.assert_allclose(printed, direct, atol=5e-6)


def test_synthetic_sim_table_reports_gain_vs_static(capsys):
    code = run(
        "--pipeline", "synthetic", "--mode", "sim", "--scheme", "STATIC,SS",
        "--workers", "4", "--tasks", "50", "--reps", "2",
    )
    assert code == 0
    out = capsys.readouterr().out
    static_line = next(l for l in out.splitlines() if l.startswith("STATIC"))
    ss_line = next(l for l in out.splitlines() if l.startswith("SS"))
    assert "+0.0%" in static_line
    assert "%" in ss_line


def test_gain_is_na_without_static_baseline(capsys):
    code = run(
        "--pipeline", "synthetic", "--mode", "sim", "--scheme", "SS",
        "--workers", "2", "--tasks", "10", "--reps", "1",
    )
    assert code == 0
    assert "n/a" in capsys.readouterr().out


def test_synthetic_real_spin_kernel(capsys):
    code = run(
        "--pipeline", "synthetic", "--mode", "real", "--scheme", "SS",
        "--workers", "2", "--tasks", "8", "--cost-dist", "uniform",
        "--cost-low", "1", "--cost-unit-ns", "1000", "--reps", "1",
    )
    assert code == 0


def test_scheme_all_runs_every_scheme(tmp_path, capsys):
    csv = tmp_path / "all.csv"
    code = run(
        "--pipeline", "synthetic", "--mode", "sim", "--scheme", "all",
        "--workers", "4", "--tasks", "40", "--reps", "1", "--csv", str(csv),
    )
    assert code == 0
    rows = read_summary_csv(csv)
    assert [r["scheme"] for r in rows] == [m.name for m in SchemeId]


def test_detail_csvs_written(tmp_path, capsys):
    chunk, steal = tmp_path / "c.csv", tmp_path / "s.csv"
    code = run(
        "--pipeline", "synthetic", "--mode", "sim", "--scheme", "GSS",
        "--layout", "PER_WORKER", "--workers", "4", "--tasks", "100",
        "--reps", "1", "--chunk-csv", str(chunk), "--steal-csv", str(steal),
    )
    assert code == 0
    chunk_lines = chunk.read_text().splitlines()
    assert chunk_lines[0].startswith("pipeline,scheme,layout")
    assert len(chunk_lines) > 1
    assert steal.read_text().splitlines()[0].startswith("pipeline,scheme,layout,victim")


# -- determinism ---------------------------------------------------------------------


def test_sim_mode_csv_is_reproducible(tmp_path, capsys):
    argv = [
        "--pipeline", "synthetic", "--mode", "sim", "--scheme", "GSS,FAC2",
        "--layout", "PER_WORKER", "--victim", "RND", "--workers", "4",
        "--tasks", "200", "--reps", "3", "--seed", "11", "--steal-latency", "0.5",
    ]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(*argv, "--csv", str(a)) == 0
    assert run(*argv, "--csv", str(b)) == 0
    assert a.read_bytes() == b.read_bytes()


def test_real_mode_results_stable_timing_free(capsys):
    argv = [
        "--pipeline", "cc", "--mode", "real", "--scheme", "GSS",
        "--layout", "PER_WORKER", "--workers", "2", "--gen", "rmat:64",
        "--reps", "1", "--seed", "4",
    ]
    assert run(*argv) == 0
    first = capsys.readouterr().out
    assert run(*argv) == 0
    second = capsys.readouterr().out
    line = lambda text: next(l for l in text.splitlines() if "components=" in l)
    assert line(first) == line(second)


# -- help text -----------------------------------------------------------------------


def test_help_lists_every_strategy_name(capsys):
    assert run("--help") == 0
    out = capsys.readouterr().out
    for member in (*SchemeId, *LayoutId, *VictimStrategy):
        assert member.name in out

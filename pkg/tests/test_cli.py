import numpy as np
import pytest

from scarp.cli import (ResultRow, RunConfig, aggregate_rows, main,
                       parse_manifest, read_rows, run_experiment, run_suite,
                       write_rows)
from scarp.graph import ProblemContext
from scarp.instance import load_instance, serialize_instance
from scarp.solution import parse_solution

from conftest import random_instance

CLASSIC = """NAME : cli-demo
VERTICES : 5
DEPOT : 1
REQUIRED EDGES : 6
NON-REQUIRED EDGES : 0
VEHICLES : 3
CAPACITY : 6
NODES COST DEMAND
1 2 2 2
2 3 3 3
3 4 2 2
4 5 1 2
1 5 2 3
2 4 4 2
END
"""


@pytest.fixture(scope="module")
def instance_path(tmp_path_factory):
    rng = np.random.default_rng(55)
    inst = random_instance(rng, n_nodes=6, extra_edges=5, capacity=8.0)
    path = tmp_path_factory.mktemp("data") / "demo.txt"
    path.write_text(serialize_instance(inst), encoding="utf-8")
    return str(path)


def _config(instance_path, **kw):
    defaults = dict(instance_path=instance_path, approach="tight",
                    n_replications=100, seed=3, nc=10, mni=300, mnui=150)
    defaults.update(kw)
    return RunConfig(**defaults)


def test_run_experiment_populates_both_phases(instance_path):
    row = run_experiment(_config(instance_path, k_noise=0.2))
    assert row.det_cost > 0
    assert row.trip_count >= 1
    assert row.emp_mean_cost is not None
    assert row.emp_mean_cost >= row.det_cost - 1e-9
    assert row.emp_variability is not None
    assert row.total_time_s > 0


def test_run_experiment_replication_can_be_cancelled(instance_path):
    row = run_experiment(_config(instance_path, no_replication=True))
    assert row.emp_mean_cost is None
    assert row.emp_variability is None
    assert row.det_cost > 0


def test_rows_round_trip_full_precision(tmp_path, instance_path):
    rows = [run_experiment(_config(instance_path, k_noise=0.2)),
            run_experiment(_config(instance_path, approach="law-mean",
                                   k_noise=0.2, no_replication=True))]
    out = tmp_path / "rows.csv"
    write_rows(rows, out)
    again = read_rows(out)
    assert again == rows


def test_identical_config_rows_match_except_walltime(instance_path):
    a = run_experiment(_config(instance_path, k_noise=0.2))
    b = run_experiment(_config(instance_path, k_noise=0.2))
    skip = {"total_time_s", "time_to_best_s"}
    for name in ResultRow.csv_header():
        if name in skip:
            continue
        assert getattr(a, name) == getattr(b, name), name


def test_solution_out_parses_back(tmp_path, instance_path):
    sol_path = tmp_path / "best.txt"
    config = _config(instance_path, no_replication=True,
                     solution_out=str(sol_path))
    row = run_experiment(config)
    ctx = ProblemContext.build(load_instance(instance_path))
    sol = parse_solution(sol_path.read_text(), ctx)
    assert sol.det_cost == pytest.approx(row.det_cost)
    assert sol.trip_count == row.trip_count


def test_manifest_suite_and_aggregates(tmp_path, instance_path):
    manifest = tmp_path / "suite.txt"
    manifest.write_text(
        f"# two approaches on one instance\n"
        f"instance={instance_path} approach=tight seed=3 nc=10 mni=300 "
        f"mnui=150 replications=100 k_noise=0.2 label=tight baseline=1\n"
        f"instance={instance_path} approach=law-mean seed=3 nc=10 mni=300 "
        f"mnui=150 replications=100 k_noise=0.2 label=law\n",
        encoding="utf-8")
    configs = parse_manifest(manifest)
    assert len(configs) == 2
    assert configs[0].baseline and not configs[1].baseline
    rows = run_suite(configs)
    assert [r.label for r in rows] == ["tight", "law"]
    aggs = aggregate_rows(rows)
    assert [a["label"] for a in aggs] == ["tight", "law"]
    law = aggs[1]
    assert law["runs"] == 1
    assert "avg_det_gap_vs_baseline" in law
    assert law["avg_variability"] is not None
    tight_agg = aggs[0]
    assert tight_agg["avg_extra_trip_rate"] is not None


def test_suite_of_one_equals_single_row(instance_path):
    config = _config(instance_path, k_noise=0.2)
    suite_row = run_suite([config])[0]
    single = run_experiment(config)
    skip = {"total_time_s", "time_to_best_s"}
    for name in ResultRow.csv_header():
        if name not in skip:
            assert getattr(suite_row, name) == getattr(single, name)


def test_suite_parallel_workers_match_serial(instance_path):
    configs = [_config(instance_path, k_noise=0.2, seed=s) for s in (3, 4)]
    serial = run_suite(configs, workers=1)
    parallel = run_suite(configs, workers=2)
    skip = {"total_time_s", "time_to_best_s"}
    for a, b in zip(serial, parallel):
        for name in ResultRow.csv_header():
            if name not in skip:
                assert getattr(a, name) == getattr(b, name)


def test_aggregate_without_baseline_omits_ratio_columns(instance_path):
    row = run_experiment(_config(instance_path, k_noise=0.2))
    aggs = aggregate_rows([row])
    assert "avg_det_gap_vs_baseline" not in aggs[0]


def test_cli_convert_and_solve_end_to_end(tmp_path, capsys):
    classic = tmp_path / "demo.dat"
    classic.write_text(CLASSIC, encoding="utf-8")
    canonical = tmp_path / "demo.txt"
    rc = main(["convert", "--classic", str(classic), "--out", str(canonical)])
    assert rc == 0
    inst = load_instance(canonical)
    assert inst.task_count == 6

    out_csv = tmp_path / "row.csv"
    rc = main(["solve", "--instance", str(canonical), "--approach",
               "law-meanstd:10", "--k-noise", "0.2", "--seed", "2",
               "--nc", "10", "--mni", "300", "--mnui", "150",
               "--replications", "100", "--out", str(out_csv)])
    assert rc == 0
    captured = capsys.readouterr().out
    assert "cli-demo" in captured
    rows = read_rows(out_csv)
    assert len(rows) == 1
    assert rows[0].approach == "law-meanstd:10"


def test_cli_errors_give_nonzero_exit(tmp_path, capsys):
    missing = tmp_path / "nope.txt"
    rc = main(["solve", "--instance", str(missing), "--approach", "tight"])
    assert rc == 1
    assert "error:" in capsys.readouterr().err

import json

import pytest

from rtslab import validation
from rtslab.cli import main
from rtslab.formats import CELLS_HEADER, RUNS_HEADER

RUN_YAML = """\
n: 20
mu: 4
w: 2
algorithm: rts
policy: without_replacement
stop:
  require_both_optima: true
  budget: 50000
  stagnation_collapse: false
  stagnation_w_minus_1: false
"""

GRID_YAML = """\
protocol: runtime_growth
n: 16
mu: [2, 3]
w: [2, mu]
algorithm: rts
policy: without_replacement
distance: genotypic
runs: 4
budget: unbounded
"""


@pytest.fixture
def files(tmp_path):
    run_cfg = tmp_path / "run.yaml"
    run_cfg.write_text(RUN_YAML)
    grid_cfg = tmp_path / "grid.yaml"
    grid_cfg.write_text(GRID_YAML)
    return tmp_path, run_cfg, grid_cfg


def test_run_summary_is_deterministic(files, capsys):
    _, run_cfg, _ = files
    assert main(["run", "--config", str(run_cfg), "--seed", "5"]) == 0
    first = capsys.readouterr().out
    assert main(["run", "--config", str(run_cfg), "--seed", "5"]) == 0
    assert capsys.readouterr().out == first
    assert "status" in first and "generations" in first


def test_run_trace(files):
    tmp, run_cfg, _ = files
    trace = tmp / "trace.csv"
    assert main(["run", "--config", str(run_cfg), "--seed", "5", "--trace", str(trace)]) == 0
    lines = trace.read_text().splitlines()
    assert lines[0] == "generation,count0,count1,best0,best1"
    assert lines[1].startswith("0,")
    assert len(lines) > 2


def test_run_requires_seed(files):
    _, run_cfg, _ = files
    assert main(["run", "--config", str(run_cfg)]) == 1


def test_unknown_key_rejected(files, capsys):
    tmp, _, _ = files
    bad = tmp / "bad.yaml"
    bad.write_text(RUN_YAML.replace("w: 2", "windowsize: 2"))
    assert main(["run", "--config", str(bad), "--seed", "1"]) == 1
    err = capsys.readouterr().err
    assert "windowsize" in err and "line 3" in err


def test_unknown_nested_key_rejected(files, capsys):
    tmp, _, _ = files
    bad = tmp / "bad.yaml"
    bad.write_text(RUN_YAML.replace("  budget: 50000", "  budget: 50000\n  patience: 3"))
    assert main(["run", "--config", str(bad), "--seed", "1"]) == 1
    assert "stop.patience" in capsys.readouterr().err


def test_mu_zero_rejected(files):
    tmp, _, _ = files
    bad = tmp / "bad.yaml"
    bad.write_text(RUN_YAML.replace("mu: 4", "mu: 0"))
    assert main(["run", "--config", str(bad), "--seed", "1"]) == 1


def test_missing_key_rejected(files, capsys):
    tmp, _, _ = files
    bad = tmp / "bad.yaml"
    bad.write_text(RUN_YAML.replace("algorithm: rts\n", ""))
    assert main(["run", "--config", str(bad), "--seed", "1"]) == 1
    assert "algorithm" in capsys.readouterr().err


def test_bad_choice_and_yaml(files):
    tmp, _, _ = files
    bad = tmp / "bad.yaml"
    bad.write_text(RUN_YAML.replace("policy: without_replacement", "policy: sometimes"))
    assert main(["run", "--config", str(bad), "--seed", "1"]) == 1
    bad.write_text("n: [1, 2\n")
    assert main(["run", "--config", str(bad), "--seed", "1"]) == 1
    assert main(["run", "--config", str(tmp / "missing.yaml"), "--seed", "1"]) == 1


def test_grid_outputs(files):
    tmp, _, grid_cfg = files
    out = tmp / "out"
    assert main(["grid", "--config", str(grid_cfg), "--seed", "3", "--out", str(out),
                 "--parallel", "1"]) == 0
    runs = (out / "runs.csv").read_text().splitlines()
    cells = (out / "cells.csv").read_text().splitlines()
    assert runs[0] == ",".join(RUNS_HEADER)
    assert runs[0] == ("protocol,algorithm,policy,distance,n,mu,w,run_index,seed,status,"
                       "generations,lone,best_branch0,best_branch1,min_branch_best")
    assert cells[0] == ("protocol,algorithm,policy,distance,n,mu,w,runs,success_count,"
                        "mean_generations,std_generations,lone_count,mean_min_branch_best,"
                        "std_min_branch_best")
    assert cells[0] == ",".join(CELLS_HEADER)
    assert len(runs) == 1 + 4 * 4 and len(cells) == 1 + 4
    # w = mu is written as the resolved integer
    assert cells[-1].split(",")[5:7] == ["3", "3"]
    report = json.loads((out / "report.json").read_text())
    assert report["spec"]["w"] == [2, "mu"] and len(report["cells"]) == 4
    for row, cell in zip(cells[1:], report["cells"]):
        assert float(row.split(",")[9]) == cell["mean_generations"]


def test_grid_byte_identical_reruns(files):
    tmp, _, grid_cfg = files
    outs = []
    for name, par in (("a", "1"), ("b", "1"), ("c", "2")):
        out = tmp / name
        assert main(["grid", "--config", str(grid_cfg), "--seed", "3", "--out", str(out),
                     "--parallel", par]) == 0
        outs.append([(out / f).read_bytes() for f in ("runs.csv", "cells.csv", "report.json")])
    assert outs[0] == outs[1] == outs[2]


def test_grid_single_run(files):
    tmp, _, grid_cfg = files
    one = tmp / "one.yaml"
    one.write_text(GRID_YAML.replace("mu: [2, 3]", "mu: 2").replace("w: [2, mu]", "w: 2")
                   .replace("runs: 4", "runs: 1"))
    out = tmp / "one"
    assert main(["grid", "--config", str(one), "--seed", "3", "--out", str(out)]) == 0
    assert len((out / "runs.csv").read_text().splitlines()) == 2
    # a single run has no sample deviation
    assert (out / "cells.csv").read_text().splitlines()[1].split(",")[10] == "nan"


def test_grid_requires_seed(files):
    _, _, grid_cfg = files
    assert main(["grid", "--config", str(grid_cfg), "--out", "x"]) == 1


def test_grid_floats_round_trip(files):
    tmp, _, grid_cfg = files
    out = tmp / "rt"
    main(["grid", "--config", str(grid_cfg), "--seed", "4", "--out", str(out)])
    for line in (out / "cells.csv").read_text().splitlines()[1:]:
        for field in line.split(",")[9:]:
            assert repr(float(field)) == field or field.isdigit()


def test_oracle_t0(capsys):
    assert main(["oracle", "--n", "2", "--mu", "2", "--w", "2", "--T", "0"]) == 0
    assert capsys.readouterr().out.strip() == "0.125"


def test_oracle_policy_coincidence(capsys):
    outs = []
    for pol in ("with_replacement", "without_replacement"):
        assert main(["oracle", "--n", "2", "--mu", "2", "--w", "1", "--policy", pol,
                     "--T", "50"]) == 0
        outs.append(capsys.readouterr().out)
    assert outs[0] == outs[1]


def test_oracle_limit_breach():
    assert main(["oracle", "--n", "3", "--mu", "2", "--max-n", "2", "--T", "5"]) == 1
    assert main(["oracle", "--n", "3", "--mu", "2", "--max-states", "10", "--T", "5"]) == 1
    assert main(["oracle", "--n", "5", "--mu", "2", "--T", "5"]) == 1


def test_oracle_expected(capsys):
    assert main(["oracle", "--n", "2", "--mu", "2", "--kind", "plain", "--expected"]) == 0
    assert capsys.readouterr().out.strip() == "4"
    assert main(["oracle", "--n", "1", "--mu", "1", "--expected"]) == 0
    cap = capsys.readouterr()
    assert cap.out.strip() == "inf" and "trapped" in cap.err


def test_oracle_needs_one_query():
    assert main(["oracle", "--n", "2", "--mu", "2"]) == 1
    assert main(["oracle", "--n", "2", "--mu", "2", "--T", "3", "--expected"]) == 1


def test_validate_fast_passes(capsys):
    assert main(["validate", "--level", "fast"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "checks passed" in out


def test_validate_reports_broken_check(monkeypatch, capsys):
    def broken(ctx):
        return validation.CheckResult("deliberately-broken", False, "0", ">= 1")

    monkeypatch.setitem(validation.FAST_CHECKS, "deliberately-broken", broken)
    assert main(["validate", "--level", "fast"]) == 3
    out = capsys.readouterr().out
    assert "FAIL deliberately-broken" in out


def test_validate_reports_raising_check(monkeypatch, capsys):
    def boom(ctx):
        raise RuntimeError("threshold unreachable")

    monkeypatch.setitem(validation.FAST_CHECKS, "raises", boom)
    assert main(["validate", "--level", "fast"]) == 3
    assert "threshold unreachable" in capsys.readouterr().out


def test_invariant_violation_exit_code(files, monkeypatch):
    from rtslab import cli
    from rtslab.engine import InvariantViolation

    def explode(*a, **k):
        raise InvariantViolation("branch 0 became extinct")

    monkeypatch.setattr(cli, "run", explode)
    _, run_cfg, _ = files
    assert main(["run", "--config", str(run_cfg), "--seed", "1"]) == 2


def test_failed_cell_gives_exit_2(files, monkeypatch):
    from rtslab import experiments
    from rtslab.engine import InvariantViolation

    def explode(config, jobs):
        raise InvariantViolation("branch 1 became extinct")

    monkeypatch.setattr(experiments, "_run_chunk", explode)
    tmp, _, grid_cfg = files
    out = tmp / "f"
    assert main(["grid", "--config", str(grid_cfg), "--seed", "1", "--out", str(out),
                 "--parallel", "1"]) == 2
    report = json.loads((out / "report.json").read_text())
    assert all(c["failed"] for c in report["cells"])
    assert len((out / "cells.csv").read_text().splitlines()) == 1

import csv
import io
import json
import subprocess
import sys

import pytest

from toda_sigma.cli import main
from toda_sigma.closure import SigmaSet, enumerate_sigma
from toda_sigma.conic import Conic
from toda_sigma.numeric import Cmp, real_cmp


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("mu1,mu2,rows", [("1", "1", 6), ("2", "2", 20), ("3/10", "3/10", 6), ("0.3", "0.3", 6)])
def test_enumerate_csv_rows(capsys, mu1, mu2, rows):
    code, out, _ = run(capsys, "enumerate", "--mu1", mu1, "--mu2", mu2, "--format", "csv")
    assert code == 0
    table = list(csv.DictReader(io.StringIO(out)))
    assert len(table) == rows
    assert set(table[0]) == {"s1", "s2", "provenance"}


def test_enumerate_json_round_trip(capsys, tmp_path):
    target = tmp_path / "sigma.json"
    code, out, _ = run(capsys, "enumerate", "--mu1", "2", "--mu2", "2", "-o", str(target))
    assert code == 0 and out == ""
    back = SigmaSet.from_json(target.read_text())
    ref = enumerate_sigma(Conic(2, 2))
    assert len(back) == len(ref) == 20
    for p, q in zip(back, ref):
        assert real_cmp(p.s1, q.s1) is Cmp.EQ and real_cmp(p.s2, q.s2) is Cmp.EQ


def test_enumerate_budget_failure(capsys):
    code, out, err = run(capsys, "enumerate", "--mu1", "3", "--mu2", "3", "--budget", "5")
    assert code == 2
    assert out == ""
    assert "ClosureBudgetExceeded" in err


@pytest.mark.parametrize("argv", [
    ["enumerate", "--mu1", "1"],
    ["enumerate", "--mu1", "x", "--mu2", "1"],
    ["enumerate", "--mu1", "0", "--mu2", "1"],
    ["enumerate", "--mu1", "1", "--mu2", "1", "--precision", "10"],
    ["quantize", "--n", "2", "--gamma", "0"],
    ["quantize", "--n", "2", "--gamma", "-1,0"],
    ["simulate"],
    [],
])
def test_usage_errors_exit_1(capsys, argv):
    with pytest.raises(SystemExit) as info:
        sys.exit(main(argv))
    assert info.value.code == 1


def test_precision_env(capsys, monkeypatch):
    monkeypatch.setenv("TODA_SIGMA_PRECISION", "128")
    code, out, _ = run(capsys, "enumerate", "--mu1", "1", "--mu2", "1")
    assert code == 0 and json.loads(out)["count"] == 6
    monkeypatch.setenv("TODA_SIGMA_PRECISION", "bogus")
    code, _, err = run(capsys, "enumerate", "--mu1", "1", "--mu2", "1")
    assert code == 1 and "TODA_SIGMA_PRECISION" in err


@pytest.mark.parametrize("n,gamma,sigma,margins", [
    ("2", "0,0", ["4", "4"], ["2", "2"]),
    ("2", "1,1", ["8", "8"], ["4", "4"]),
    ("3", "0,1/2,0", ["7", "10", "7"], ["2", "3", "2"]),
])
def test_quantize(capsys, n, gamma, sigma, margins):
    code, out, _ = run(capsys, "quantize", "--n", n, "--gamma", gamma)
    assert code == 0
    rep = json.loads(out)
    assert rep["sigma"] == sigma
    assert rep["pohozaev_residual"] == "0"
    assert rep["margins"] == margins


def test_simulate_presets_and_check(capsys, tmp_path):
    traj = tmp_path / "tower.csv"
    code, out, _ = run(capsys, "simulate", "--preset", "tower", "--trajectory", str(traj))
    assert code == 0
    rep = json.loads(out)
    assert len(rep["plateaus"]) == 3
    assert rep["sigma_set_match"] == [True, True, True]

    code, out, _ = run(capsys, "check", str(traj))
    assert code == 0 and json.loads(out)["ok"]

    code, out, _ = run(capsys, "simulate", "--preset", "scalar")
    (plateau,) = json.loads(out)["plateaus"]
    assert abs(plateau[0] - 2) <= 1e-3

    code, out, _ = run(capsys, "simulate", "--preset", "symmetric")
    rep = json.loads(out)
    (plateau,) = rep["plateaus"]
    assert max(abs(x - 4) for x in plateau) <= 1e-3
    assert rep["sigma_set_match"] == [True]


def test_check_detects_violation_and_malformed(capsys, tmp_path):
    traj = tmp_path / "sym.csv"
    assert run(capsys, "simulate", "--preset", "symmetric", "--trajectory", str(traj))[0] == 0
    # wrong singular strengths break the Pohozaev law
    code, _, err = run(capsys, "check", str(traj), "--gamma", "1,1")
    assert code == 5 and "residual" in err
    code, _, _ = run(capsys, "check", str(traj), "--threshold", "1e-20")
    assert code == 5

    bad = tmp_path / "bad.csv"
    bad.write_text("t,r,u1\n1,2,3\n")
    assert run(capsys, "check", str(bad))[0] == 4
    assert run(capsys, "check", str(tmp_path / "missing.csv"))[0] == 4


def test_simulate_overflow_exit_3(capsys):
    code, out, err = run(capsys, "simulate", "--gamma", "0", "--eta", "800")
    assert code == 3
    assert "t = " in err and out == ""


def test_simulate_custom_problem(capsys):
    code, out, _ = run(capsys, "simulate", "--gamma", "1/2,0", "--eta", "0,0", "--t-end", "20")
    assert code == 0
    rep = json.loads(out)
    assert rep["final_decay"] == ["fast", "fast"]
    assert all(abs(x - 5) < 1e-3 for x in rep["final_sigma"])


def test_sweep(capsys, tmp_path):
    jobs = [["enumerate", "--mu1", "1", "--mu2", "1"], ["quantize", "--n", "2", "--gamma", "1,1"],
            ["enumerate", "--mu1", "3", "--mu2", "3", "--budget", "3"]]
    job_file = tmp_path / "jobs.json"
    job_file.write_text(json.dumps(jobs))
    code, out, _ = run(capsys, "--sweep", str(job_file), "--out-dir", str(tmp_path / "out"), "--jobs", "2")
    assert code == 6
    summary = json.loads(out)
    assert [s["exit"] for s in summary] == [0, 0, 2]
    assert json.loads((tmp_path / "out" / "job-000.out").read_text())["count"] == 6
    assert json.loads((tmp_path / "out" / "job-001.out").read_text())["sigma"] == ["8", "8"]


def test_sweep_rejects_bad_file(capsys, tmp_path):
    job_file = tmp_path / "jobs.json"
    job_file.write_text('{"not": "a list"}')
    assert run(capsys, "--sweep", str(job_file))[0] == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "toda_sigma", "quantize", "--n", "1", "--gamma", "1/2"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["sigma"] == ["3"]

import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from diracsys import cli
from diracsys.dirac import LinearStructure

FIX = Path(__file__).parent / "fixtures"


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def summary(capsys, *argv):
    code, out, err = run(capsys, "simulate", *argv)
    assert code == 0, err
    return json.loads(out)


# -- check --------------------------------------------------------------------


def test_check_passes_and_is_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(capsys, "check", "--seed", 42, "--trials", 5, "--output", a)[0] == 0
    assert run(capsys, "check", "--seed", 42, "--trials", 5, "--output", b)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    report = json.loads(a.read_text())
    assert report["schema"] == "diracsys.check/1" and report["passed"]
    assert len(report["suites"]) == 10


def test_check_single_suite_to_stdout(capsys):
    code, out, _ = run(capsys, "check", "--suite", "twist", "--trials", 3)
    assert code == 0
    assert [s["name"] for s in json.loads(out)["suites"]] == ["twist"]


def test_check_property_failure_exit(capsys):
    code, out, _ = run(capsys, "check", "--suite", "functoriality", "--trials", 3, "--tol", "1e-300")
    assert code == cli.EXIT_PROPERTY
    assert not json.loads(out)["passed"]


def test_check_structure_audit(capsys):
    code, out, _ = run(capsys, "check", "--suite", "twist", "--trials", 2, "--structure", FIX / "compose_da.json")
    assert code == 0
    audit = json.loads(out)["structure"]
    assert audit["class"] == "dirac" and audit["dim_f2"] == 0 and audit["passed"]


def test_check_corrupted_structure(capsys):
    code, _, err = run(capsys, "check", "--structure", FIX / "corrupted.json")
    assert code == cli.EXIT_USAGE and "invalid JSON" in err


@pytest.mark.parametrize("seed", ["-1", str(2**64), "abc"])
def test_check_bad_seed(capsys, seed):
    assert run(capsys, "check", "--seed", seed)[0] == cli.EXIT_USAGE


def test_check_bad_trials(capsys):
    assert run(capsys, "check", "--trials", 0)[0] == cli.EXIT_USAGE


# -- compose ------------------------------------------------------------------


def compose_args():
    return [FIX / "compose_da.json", FIX / "compose_db.json", FIX / "compose_di.json"]


def test_compose_matches_golden(capsys, tmp_path):
    out_path = tmp_path / "out.json"
    code, _, _ = run(capsys, "compose", *compose_args(), "--output", out_path)
    assert code == 0
    doc = json.loads(out_path.read_text())
    assert doc["schema"] == "diracsys.compose/1"
    assert doc["dims"] == {"u1": 2, "u2": 1, "v1": 2, "v2": 1}
    got = LinearStructure.from_json(doc)
    golden = LinearStructure.from_json(json.loads((FIX / "compose_golden.json").read_text()))
    assert got.is_dirac and got.equals(golden)


def test_compose_port_flags_override(capsys):
    code, out, _ = run(capsys, "compose", *compose_args(), "--u2", 1, "--v2", 1)
    assert code == 0 and json.loads(out)["class"] == "dirac"


def test_compose_dimension_mismatch(capsys):
    code, _, err = run(capsys, "compose", *compose_args(), "--u2", 2)
    assert code == cli.EXIT_USAGE and "D_I" in err


def test_compose_missing_port_dim(capsys):
    da, db, di = compose_args()
    code, _, err = run(capsys, "compose", di, db, di)
    assert code == cli.EXIT_USAGE and "port dimension" in err


def test_compose_non_dirac_input(capsys, tmp_path):
    full = {"n": 2, "span": {"ambient_dim": 4, "basis": np.eye(4).tolist()}, "port_dim": 1}
    path = tmp_path / "full.json"
    path.write_text(json.dumps(full))
    _, db, di = compose_args()
    code, _, err = run(capsys, "compose", path, db, di)
    assert code == cli.EXIT_USAGE and "not Dirac" in err


def test_compose_missing_file(capsys, tmp_path):
    _, db, di = compose_args()
    assert run(capsys, "compose", tmp_path / "nope.json", db, di)[0] == cli.EXIT_USAGE


# -- simulate -----------------------------------------------------------------


def test_simulate_lc_loop_csv(capsys, tmp_path):
    out = tmp_path / "lc.csv"
    s = summary(capsys, "--model", "lc", "--netlist", FIX / "loop.json", "--dt", 1e-2, "--t-final", 20, "--output", out)
    assert s["schema"] == "diracsys.simulate/1" and s["steps"] == 2000
    assert s["energy_drift"] <= 1e-10 and s["max_kcl_residual"] <= 1e-12
    rows = out.read_text().strip().splitlines()
    assert rows[0].startswith("t,x0,x1,")
    assert len(rows) == 2002
    data = np.loadtxt(out, delimiter=",", skiprows=1)
    q = data[:, 2]  # charge on C1
    idx = np.nonzero((q[:-1] < 0) & (q[1:] >= 0))[0]
    period = np.diff(data[idx, 0]).mean()
    assert period == pytest.approx(2 * math.pi, rel=2e-3)


def test_simulate_zero_length(capsys, tmp_path):
    out = tmp_path / "z.csv"
    s = summary(capsys, "--model", "oscillator", "--t-final", 0, "--output", out)
    assert s["steps"] == 0
    assert len(out.read_text().strip().splitlines()) == 2


def test_simulate_json_format(capsys, tmp_path):
    out = tmp_path / "t.json"
    summary(capsys, "--model", "oscillator", "--param", "g=1", "--dt", 0.1, "--output", out, "--format", "json")
    traj = json.loads(out.read_text())
    assert traj["schema"] == "diracsys.trajectory/1" and len(traj["times"]) == 11


def test_simulate_open_oscillator_power(capsys):
    s = summary(capsys, "--model", "oscillator", "--param", "g=1", "--param", "w=2")
    assert s["max_power_residual"] <= 1e-6 and not s["closed"]


def test_simulate_nonholonomic(capsys):
    s = summary(capsys, "--model", "nonholonomic", "--t-final", 0.5)
    assert s["max_constraint_residual"] <= 1e-8 and s["energy_drift"] <= 1e-7


def test_simulate_spring_pendulum(capsys):
    s = summary(capsys, "--model", "spring-pendulum", "--t-final", 0.5, "--param", "k=20")
    assert s["energy_drift"] <= 1e-7


def test_simulate_pendulum_pair(capsys):
    s = summary(capsys, "--model", "pendulum-pair", "--closed", "--t-final", 0.5, "--param", "theta0=0.5")
    assert s["closed"] and s["sticking_residual"] <= 1e-6


def test_simulate_closed_lc_with_closure_file(capsys, tmp_path):
    net = {
        "branches": [
            {"id": "L1", "kind": "L", "value": 2.0},
            {"id": "C1", "kind": "C", "value": 0.5},
            {"id": "a", "kind": "port"},
            {"id": "b", "kind": "port"},
        ],
        "kcl": [[1, 0, -1, 0], [0, 1, 0, -1]],
    }
    closure = {"n": 2, "span": {"ambient_dim": 4, "basis": [[1, -1, 0, 0], [0, 0, 1, 1]]}}
    (tmp_path / "net.json").write_text(json.dumps(net))
    (tmp_path / "closure.json").write_text(json.dumps(closure))
    s = summary(
        capsys, "--model", "lc", "--netlist", tmp_path / "net.json", "--closed", tmp_path / "closure.json",
        "--param", "q0=0,1", "--param", "v0=0.1,-0.1", "--t-final", 1,
    )
    assert s["closed"] and s["energy_drift"] <= 1e-9


def test_simulate_inconsistent_initial_state(capsys):
    code, _, err = run(capsys, "simulate", "--model", "oscillator", "--closed", "--param", "g=1", "--param", "p0=1")
    assert code == cli.EXIT_INCONSISTENT and "inconsistent" in err


def test_simulate_regularity_violation(capsys):
    code, _, err = run(capsys, "simulate", "--model", "pendulum-pair", "--closed", "--dt", 5, "--t-final", 20)
    assert code == cli.EXIT_REGULARITY and "regularity" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["--model", "oscillator", "--param", "bogus=1"],
        ["--model", "oscillator", "--param", "m"],
        ["--model", "oscillator", "--param", "m=-1"],
        ["--model", "oscillator", "--dt", "0"],
        ["--model", "oscillator", "--dt", "nan"],
        ["--model", "oscillator", "--t-final", "-1"],
        ["--model", "oscillator", "--seed", "-3"],
        ["--model", "lc"],
        ["--model", "lc", "--netlist", str(FIX / "corrupted.json")],
        ["--model", "lc", "--netlist", str(FIX / "loop.json"), "--closed"],
        ["--model", "nonholonomic", "--closed"],
        ["--model", "pendulum", "--dt", "0.1"],
    ],
)
def test_simulate_usage_errors(capsys, argv):
    assert run(capsys, "simulate", *argv)[0] == cli.EXIT_USAGE


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "diracsys", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("diracsys ")
    proc = subprocess.run([sys.executable, "-m", "diracsys"], capture_output=True, text=True)
    assert proc.returncode == cli.EXIT_USAGE

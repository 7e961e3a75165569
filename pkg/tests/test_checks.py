import json

import numpy as np
import pytest

from diracsys import checks, dirac, transfer
from diracsys import subspace as ss


def test_generators_have_requested_class():
    rng = np.random.default_rng(0)
    for _ in range(30):
        n = int(rng.integers(1, 6))
        assert checks.random_dirac(rng, n).reclassify() == dirac.DIRAC
        assert checks.random_isotropic(rng, n).is_isotropic
        assert checks.random_coisotropic(rng, n).is_coisotropic
        assert np.linalg.norm(checks.random_map(rng, 3, n), 2) == pytest.approx(1.0)


def test_projector_distance():
    a = np.array([[1.0], [0.0]])
    assert checks.projector_distance(a, 2 * a) < 1e-14
    assert checks.projector_distance(a, np.array([[0.0], [1.0]])) == pytest.approx(np.sqrt(2))
    assert checks.projector_distance(np.zeros((2, 0)), np.zeros((2, 0))) == 0.0


def test_oracle_defects():
    d = dirac.from_form(dirac.TwoForm([[0.0, 1.0], [-1.0, 0.0]]))
    assert checks.oracle_isotropy_defect(2, d.span.basis) < 1e-14
    assert checks.oracle_coisotropy_defect(2, d.span.basis) < 1e-14
    assert checks.oracle_isotropy_defect(2, np.eye(4)) > 0.5
    assert checks.oracle_coisotropy_defect(2, np.zeros((4, 0))) > 0.5


def test_oracle_compose_on_identity_interconnection():
    # D_I = {u_hat = -u, a_hat = a} joins two copies of U2 + {0}: ports carry nothing
    flows = dirac.flows_only(2)
    eye, z = np.eye(1), np.zeros((1, 1))
    di = dirac.LinearStructure(2, ss.canonicalize(np.block([[eye, z], [-eye, z], [z, eye], [z, eye]])))
    want = checks.oracle_compose(flows, flows, di, 1, 1, 1, 1)
    got = transfer.compose(flows, flows, di, 1, 1, 1, 1)
    assert checks.projector_distance(got.span.basis, want) < 1e-12
    assert got.equals(dirac.flows_only(2))


def test_suite_result_bookkeeping():
    res = checks.SuiteResult("demo", 3, 1e-9)
    res.record(0, 1e-12)
    assert res.passed
    res.record(1, 1e-3, "what")
    res.fail(2, "broken")
    assert not res.passed
    data = res.to_json()
    assert data["failed"] == 2 and data["max_error"] == pytest.approx(1e-3)
    for k in range(10):
        res.fail(3 + k, "again")
    assert len(res.to_json()["failures"]) <= checks.MAX_REPORTED_FAILURES


def test_margin():
    assert checks.margin(np.eye(3)) == pytest.approx(1.0)
    assert checks.margin(np.diag([1.0, 1e-4])) == pytest.approx(1e-4)
    assert checks.margin(np.zeros((2, 2))) == 1.0


def test_run_suites_report_shape():
    report = checks.run_suites(seed=7, trials=3)
    assert report["schema"] == checks.SCHEMA and report["seed"] == 7
    assert [s["name"] for s in report["suites"]] == list(checks.SUITES)
    assert report["passed"]
    for s in report["suites"]:
        assert s["trials"] == 3 and s["max_error"] <= checks.DEFAULT_TOL
    inter = report["suites"][-1]
    assert "naive_sign_mismatches" in inter["info"]


def test_run_suites_deterministic_and_independent():
    a = checks.dumps(checks.run_suites(seed=123, trials=4))
    b = checks.dumps(checks.run_suites(seed=123, trials=4))
    assert a == b
    alone = checks.run_suites(seed=123, trials=4, names=["twist"])["suites"][0]
    together = json.loads(a)["suites"][list(checks.SUITES).index("twist")]
    assert alone == together


def test_tiny_tolerance_fails():
    report = checks.run_suites(seed=0, tol=1e-300, trials=3, names=["functoriality"])
    assert not report["passed"]


def test_full_batteries_pass_on_several_seeds():
    for seed in (1, 2, 3):
        report = checks.run_suites(seed=seed, trials=25)
        assert report["passed"], [s for s in report["suites"] if not s["passed"]]

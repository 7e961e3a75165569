"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line; ``conftest.py`` prints them at the end of
the run, and ``python3 tests/test_acceptance.py`` prints them directly.
"""

import math
import sys

import numpy as np
import pytest

from diracsys import checks, dirac, iostruct, models
from diracsys import dynamics as dy

SEED = 20240611
TOL = 1e-9
RESULTS = {}


def report(number, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d} {title}: {detail}"
    RESULTS[number] = line
    print(line)
    return ok


def run_suite(name, trials):
    rng = checks.suite_rng(SEED, name)
    return checks.SUITES[name](rng, trials=trials, tol=TOL)


def suite_detail(res):
    extra = ", ".join(f"{k}={v}" for k, v in sorted(res.info.items()))
    out = f"{res.trials} trials, max error {res.max_error:.2e}, {len(res.failures)} failures"
    return f"{out} ({extra})" if extra else out


@pytest.mark.parametrize(
    "number, title, suite",
    [
        (1, "Dirac axioms", "dirac_axioms"),
        (2, "functoriality", "functoriality"),
        (3, "class preservation", "class_preservation"),
        (4, "composition oracle", "composition_oracle"),
        (5, "isotropic round trip", "isotropic_roundtrip"),
        (6, "twist", "twist"),
    ],
)
def test_property_criterion(number, title, suite):
    res = run_suite(suite, 100)
    ok = res.passed and res.max_error <= TOL
    assert report(number, title, ok, suite_detail(res)), res.failures


def test_criterion_07_oscillator_energy():
    spec = models.quadratic_port_controlled([[0.0, 1.0], [-1.0, 0.0]], np.zeros((2, 1)), np.eye(2))
    fld = models.build_port_controlled(spec, "open").field
    traj = dy.simulate(fld, [1.0, 0.0], 0.01, 100.0)
    drift = dy.energy_drift(traj).max_drift
    ok = len(traj) - 1 == 10_000 and drift <= 1e-8
    assert report(7, "oscillator energy", ok, f"{len(traj) - 1} steps, max |E(t)-E(0)| {drift:.2e}")


def zero_crossings(times, values):
    """Upward zero crossings, linearly interpolated."""
    idx = np.nonzero((values[:-1] < 0) & (values[1:] >= 0))[0]
    t0, t1, v0, v1 = times[idx], times[idx + 1], values[idx], values[idx + 1]
    return t0 - v0 * (t1 - t0) / (v1 - v0)


def test_criterion_08_lc_frequency():
    ind, cap = 2.0, 0.5
    net = models.Netlist(
        [models.Branch("L1", "L", ind), models.Branch("C1", "C", cap)], [[1.0, -1.0]]
    )
    expected = 1.0 / math.sqrt(ind * cap)
    period = 2 * math.pi / expected
    fld = models.build_lc(net).field
    x0 = models.lc_consistent_state(net, [0.0, 1.0], [0.0, 0.0])
    traj = dy.simulate(fld, x0, period / 1000, 5 * period)
    cross = zero_crossings(traj.times, traj.states[:, 1])
    measured = 2 * math.pi / np.diff(cross).mean()
    rel = abs(measured - expected) / expected
    ok = len(cross) >= 3 and rel <= 1e-3
    assert report(8, "LC frequency", ok, f"omega {measured:.6f} vs {expected:.6f}, relative error {rel:.2e}")


def test_criterion_09_nonholonomic():
    spec = models.nonholonomic_particle()
    fld = models.build_nonholonomic(spec).field
    x0 = np.array([0.0, 0.5, 0.0, 1.0, 0.3, 0.5])
    traj = dy.simulate(fld, x0, 1e-3, 10.0)
    cres = max(models.constraint_residual(spec, x) for x in traj.states)
    drift = dy.energy_drift(traj).max_drift
    ok = len(traj) - 1 == 10_000 and cres <= 1e-8 and drift <= 1e-7
    assert report(9, "nonholonomic particle", ok, f"constraint {cres:.2e}, |H(t)-H(0)| {drift:.2e}")


def lock_residual(spec, states):
    th, x, y = states[:, 0], states[:, 1], states[:, 2]
    dx = x - np.sin(th) - (spec.x0 - math.sin(spec.theta0))
    dy_ = y - np.cos(th) - (spec.y0 - math.cos(spec.theta0))
    return float(max(np.abs(dx).max(), np.abs(dy_).max()))


def test_criterion_10_pendulum_pair():
    matched = models.PendulumPairSpec(theta0=0.5, omega0=0.2)
    generic = models.PendulumPairSpec(theta0=0.7, x0=0.3, y0=-0.2, omega0=0.4)
    errs = []
    for spec in (matched, generic):
        fld = models.build_pendulum_pair(spec).field
        traj = dy.simulate(fld, spec.initial_state(), 1e-3, 10.0)
        errs.append(lock_residual(spec, traj.states))
    ok = max(errs) <= 1e-6
    assert report(10, "pendulum pair", ok, f"matched {errs[0]:.2e}, generic {errs[1]:.2e}")


def test_criterion_11_power_balance():
    j = [[0.0, 1.0, 0.0], [-1.0, 0.0, 1.0], [0.0, -1.0, 0.0]]
    g = [[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]]
    q = np.diag([1.0, 2.0, 0.5])
    spec = models.quadratic_port_controlled(j, g, q)
    x0 = np.array([0.3, -0.2, 0.5])

    open_fld = models.build_port_controlled(spec, "open", inputs=lambda t: np.array([np.sin(t), 0.5 * np.sin(t)])).field
    open_res = dy.power_balance(dy.simulate(open_fld, x0, 1e-3, 5.0)).max_residual

    rng = np.random.default_rng(SEED)
    closures = [dirac.flows_only(2), dirac.efforts_only(2)] + [checks.random_dirac(rng, 2) for _ in range(4)]
    closed_res = 0.0
    for d_ports in closures:
        fld = models.build_port_controlled(spec, "closed", d_ports=d_ports).field
        traj = dy.simulate(fld, x0, 1e-3, 2.0, project_initial=True)
        closed_res = max(closed_res, dy.energy_drift(traj).residuals.max())
    ok = open_res <= 1e-6 and closed_res <= 1e-7
    detail = f"open max |dE/dt - e.f| {open_res:.2e}, closed max |dE/dt| {closed_res:.2e} over {len(closures)} closures"
    assert report(11, "power balance", ok, detail)


def test_criterion_12_interconnection():
    rng = np.random.default_rng([SEED, 12])
    worst, naive_bad, trials, redrawn = 0.0, 0, 0, 0
    while trials < 20:
        a, b, d_i = checks.interconnection_pair(rng, iostruct.OFIO)
        dims = (a.u1_dim, a.u2_dim, b.u1_dim, b.u2_dim)
        gap = checks.compose_margin(iostruct.ph_structure(a), iostruct.ph_structure(b), d_i, dims)
        if gap < checks.MIN_MARGIN:
            redrawn += 1
            continue
        good, naive = checks.interconnection_distances(a, b, d_i)
        worst = max(worst, good)
        naive_bad += naive > TOL
        trials += 1
    ok = worst <= TOL
    detail = (
        f"{trials} OFIO pairs, max distance {worst:.2e}, "
        f"naive sign mismatches {naive_bad}/{trials}, redrawn {redrawn}"
    )
    assert report(12, "OFIO interconnection", ok, detail)


def main():
    failed = 0
    tests = [(n, t, s) for n, t, s in test_property_criterion.pytestmark[0].args[1]]
    calls = [lambda n=n, t=t, s=s: test_property_criterion(n, t, s) for n, t, s in tests]
    calls += [
        test_criterion_07_oscillator_energy,
        test_criterion_08_lc_frequency,
        test_criterion_09_nonholonomic,
        test_criterion_10_pendulum_pair,
        test_criterion_11_power_balance,
        test_criterion_12_interconnection,
    ]
    for call in calls:
        try:
            call()
        except AssertionError:
            failed += 1
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())

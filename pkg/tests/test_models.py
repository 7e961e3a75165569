import math

import numpy as np
import pytest

from diracsys import dirac, iostruct, models
from diracsys import dynamics as dy
from diracsys import subspace as ss
from diracsys.dirac import LinearStructure, StructureError

J3 = np.array([[0.0, 1.0, -0.5], [-1.0, 0.0, 2.0], [0.5, -2.0, 0.0]])


def effective(model, x):
    return iostruct.effective_structure(model.structure(x))


# -- port-controlled ----------------------------------------------------------


def test_zero_coupling_is_hamiltonian():
    q = np.diag([1.0, 2.0, 3.0])
    spec = models.quadratic_port_controlled(J3, np.zeros((3, 1)), q)
    fld = models.build_port_controlled(spec, "open").field
    x = np.array([0.3, -1.0, 0.2])
    np.testing.assert_allclose(dy.velocity(fld, 0.0, x), J3 @ q @ x, atol=1e-12)


def test_closed_mode_is_representation_ii():
    g = np.array([[1.0], [0.0], [1.0]])
    spec = models.quadratic_port_controlled(J3, g, np.eye(3))
    model = models.build_port_controlled(spec, "closed")
    x = np.array([0.5, 0.2, -0.5])
    d = effective(model, x)
    assert model.structure(x).kind == iostruct.FIO and d.is_dirac
    assert model.field.structure_at(x).to_structure().equals(d)
    traj = dy.simulate(model.field, x, 1e-2, 1.0)
    grads = traj.states  # dE = x
    assert np.abs(grads @ g).max() <= 1e-9


def test_open_mode_power_balance():
    g = np.array([[0.0], [1.0], [0.0]])
    spec = models.quadratic_port_controlled(J3, g, np.eye(3))
    model = models.build_port_controlled(spec, "open", inputs=np.sin)
    assert effective(model, np.zeros(3)).is_coisotropic
    traj = dy.simulate(model.field, [0.1, 0.2, 0.3], 1e-2, 2.0)
    assert dy.power_balance(traj).max_residual <= 1e-6


def test_port_controlled_validation():
    with pytest.raises(StructureError):
        models.quadratic_port_controlled(np.ones((2, 2)), np.zeros((2, 1)), np.eye(2))
    spec = models.quadratic_port_controlled(J3, np.ones((3, 1)), np.eye(3))
    with pytest.raises(ValueError):
        models.build_port_controlled(spec, "half-open")
    with pytest.raises(StructureError):
        models.build_port_controlled(spec, "closed", d_ports=dirac.full_space(1))


# -- LC circuits ----------------------------------------------------------------


def four_branch():
    branches = [{"id": f"L{i}", "kind": "L", "value": 1.0 + i} for i in (1, 2)]
    branches += [{"id": f"C{i}", "kind": "C", "value": 0.5 * i} for i in (1, 2)]
    kcl = [[1, 0, 0, -1], [0, -1, 1, 0], [0, 0, -1, 1]]
    return models.Netlist(branches, kcl)


def test_four_branch_distribution():
    assert ss.equals(four_branch().distribution(), ss.span([1, 1, 1, 1]))


def test_four_branch_dirac_structure():
    # qdot in Delta, pdot + a_q in Delta ann, a_v = 0, a_p = qdot
    net = four_branch()
    delta = net.distribution()
    d1 = models.lc_dirac(delta)
    ne = 4
    ann = ss.annihilator(delta).basis
    zero = np.zeros((ne, 1))
    cols = []
    for k in range(ne):
        e = np.eye(ne)[:, [k]]
        cols.append(np.vstack([np.zeros((ne, 1)), e, zero, zero, zero, zero]))  # vdot free
        cols.append(np.vstack([zero, zero, e, -e, zero, zero]))  # pdot with a_q = -pdot
    for k in range(delta.rank):
        b = delta.basis[:, [k]]
        cols.append(np.vstack([b, zero, zero, zero, zero, b]))
    for k in range(ann.shape[1]):
        cols.append(np.vstack([zero, zero, zero, ann[:, [k]], zero, zero]))
    want = LinearStructure(3 * ne, ss.canonicalize(np.hstack(cols)))
    assert want.is_dirac and d1.equals(want)


def test_four_branch_energy_conserved():
    net = four_branch()
    fld = models.build_lc(net).field
    x0 = models.lc_consistent_state(net, [1.0, 0.0, -0.5, 0.2], [0.3] * 4)
    traj = dy.simulate(fld, x0, 1e-2, 100.0)
    assert len(traj) - 1 == 10_000
    assert dy.energy_drift(traj).max_drift <= 1e-7
    v = traj.states[:, 4:8]
    assert np.abs(v - v.mean(axis=1, keepdims=True)).max() <= 1e-9


def two_part_circuit():
    # L1 in a loop with port a, C1 in a loop with port b
    branches = [
        {"id": "L1", "kind": "L", "value": 2.0},
        {"id": "C1", "kind": "C", "value": 0.5},
        {"id": "a", "kind": "port"},
        {"id": "b", "kind": "port"},
    ]
    return models.Netlist(branches, [[1, 0, -1, 0], [0, 1, 0, -1]])


def port_closure():
    """{f_a = -f_b, e_a = e_b}."""
    basis = np.array([[1.0, -1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 1.0]]).T
    return LinearStructure(2, ss.canonicalize(basis))


def test_closing_ports_merges_circuits():
    net = two_part_circuit()
    closure = port_closure()
    assert closure.is_dirac
    model = models.build_lc(net, closure)
    assert model.structure(None).kind == iostruct.BIO
    merged = models.Netlist(net.elements, [[1, 1]])
    assert effective(model, None).equals(models.lc_dirac(merged.distribution()))
    x0 = models.lc_consistent_state(merged, [0.0, 1.0], [0.2, -0.2])
    traj = dy.simulate(model.field, x0, 1e-2, 100.0)
    v = traj.states[:, 2:4]
    assert np.abs(v.sum(axis=1)).max() <= 1e-9
    assert dy.energy_drift(traj).max_drift <= 1e-7


def test_open_circuit_with_port_voltages():
    net = two_part_circuit()
    # the voltage across port b is also the capacitor voltage, so q_C = C e_b = 0
    model = models.build_lc(net, port_efforts=lambda t: np.array([np.sin(t), 0.0]))
    assert model.structure(None).kind == iostruct.OBIO
    assert effective(model, None).is_coisotropic
    traj = dy.simulate(model.field, models.lc_consistent_state(net, [0.0, 0.0], [0.1, 0.0]), 1e-3, 2.0)
    rep = dy.power_balance(traj)
    assert rep.max_residual <= 1e-6 and rep.max_drift > 1e-3


def test_netlist_validation():
    with pytest.raises(ValueError, match="positive"):
        models.Netlist([{"id": "L1", "kind": "L", "value": 0.0}], [[1]])
    with pytest.raises(ValueError, match="independent"):
        models.Netlist([{"id": "L1", "kind": "L", "value": 1.0}, {"id": "C1", "kind": "C", "value": 1.0}], [[1, 1], [2, 2]])
    with pytest.raises(ValueError, match="kind"):
        models.Netlist([{"id": "R1", "kind": "R", "value": 1.0}], [[1]])
    with pytest.raises(ValueError, match="duplicate"):
        models.Netlist([{"id": "L1", "kind": "L", "value": 1.0}, {"id": "L1", "kind": "C", "value": 1.0}], [[1, 1]])
    with pytest.raises(ValueError):
        models.Netlist.from_json({"kcl": [[1]]})
    net = two_part_circuit()
    assert models.Netlist.from_json(net.to_json()).to_json() == net.to_json()
    with pytest.raises(ValueError):
        models.build_lc(models.Netlist(net.elements, [[1, 1]]), port_closure())


# -- nonholonomic -------------------------------------------------------------


def test_no_constraints_gives_hamilton():
    spec = models.NonholonomicSpec(
        2,
        lambda x: 0.5 * float(x @ x),
        lambda x: np.asarray(x, dtype=float),
        lambda q: np.zeros((0, 2)),
        lambda x: np.eye(4),
    )
    fld = models.build_nonholonomic(spec).field
    x = np.array([1.0, 0.5, -0.2, 0.3])
    np.testing.assert_allclose(dy.velocity(fld, 0.0, x), models.poisson_matrix(2) @ x, atol=1e-12)


def test_particle_constraint_and_energy():
    spec = models.nonholonomic_particle()
    model = models.build_nonholonomic(spec)
    x0 = np.array([0.0, 0.5, 0.0, 1.0, 0.3, 0.5])
    assert effective(model, x0).is_dirac
    traj = dy.simulate(model.field, x0, 1e-3, 2.0)
    for x in traj.states:
        qdot = x[3:]
        assert abs(qdot[2] - x[1] * qdot[0]) <= 1e-8
    assert dy.energy_drift(traj).max_drift <= 1e-7


def test_particle_multiplier():
    # differentiating p_z - y p_x = 0 along the flow gives l = p_x p_y / (1 + y^2)
    spec = models.nonholonomic_particle()
    fld = models.build_nonholonomic(spec).field
    for y, px, py in ((0.5, 1.0, 0.3), (-1.2, 0.4, 2.0), (0.0, 1.0, 1.0)):
        x = np.array([0.1, y, 0.2, px, py, y * px])
        lam, effort = fld.port_extractor(x, dy.velocity(fld, 0.0, x))
        assert lam[0] == pytest.approx(px * py / (1 + y * y), abs=1e-6)
        assert abs(effort[0]) <= 1e-12


def test_dependent_constraints_are_a_regularity_error():
    spec = models.NonholonomicSpec(
        2,
        lambda x: 0.5 * float(x[2:] @ x[2:]),
        lambda x: np.concatenate([np.zeros(2), x[2:]]),
        lambda q: np.array([[1.0, 0.0], [2.0, 0.0]]),
    )
    with pytest.raises(dy.RegularityError):
        models.build_nonholonomic(spec).field.structure_at(np.zeros(4))


# -- spring pendulum ----------------------------------------------------------


def test_spring_pendulum_equilibrium():
    model = models.build_spring_pendulum(10.0, 1.0, 1.0)
    x0 = models.spring_pendulum_state(1.0, 1.0, 0.4, 0.0, 0.0)
    traj = dy.simulate(model.field, x0, 1e-2, 1.0)
    np.testing.assert_allclose(traj.states, np.tile(x0, (len(traj), 1)), atol=1e-12)
    assert effective(model, x0).is_coisotropic


def test_spring_pendulum_energy():
    model = models.build_spring_pendulum(10.0, 1.0, 1.0)
    x0 = models.spring_pendulum_state(1.0, 1.2, 0.3, 0.0, 0.5)
    traj = dy.simulate(model.field, x0, 1e-3, 10.0)
    assert len(traj) - 1 == 10_000
    assert dy.energy_drift(traj).max_drift <= 1e-7


def test_spring_pendulum_constant_torque():
    f_theta = 0.7
    model = models.build_spring_pendulum(10.0, 1.0, 2.0, force=(0.0, f_theta))
    x0 = models.spring_pendulum_state(2.0, 1.1, 0.0, 0.1, 0.2)
    traj = dy.simulate(model.field, x0, 1e-3, 1.0)
    pdot = np.diff(traj.states[:, 5]) / np.diff(traj.times)
    assert np.abs(pdot - f_theta - models.spring_lagrangian_dtheta(x0)).max() <= 1e-8
    assert dy.power_balance(traj).max_residual <= 1e-6


def test_spring_pendulum_validation():
    with pytest.raises(ValueError):
        models.build_spring_pendulum(-1.0, 1.0, 1.0)


# -- pendulum pair ------------------------------------------------------------


def test_pendulum_pair_matched_masses_stick():
    spec = models.PendulumPairSpec(M=1.5, m=0.5, theta0=0.4, omega0=0.3)
    model = models.build_pendulum_pair(spec)
    x0 = spec.initial_state()
    assert model.structure(x0).kind == iostruct.BIO and effective(model, x0).is_dirac
    assert model.field.structure_at(x0).to_structure().equals(effective(model, x0))
    traj = dy.simulate(model.field, x0, 1e-3, 2.0)
    s = traj.states
    assert np.abs(s[:, 1] - np.sin(s[:, 0])).max() <= 1e-6
    assert np.abs(s[:, 2] - np.cos(s[:, 0])).max() <= 1e-6


def test_pendulum_pair_behaves_as_single_pendulum():
    # stuck together they form a pendulum of mass M + m: theta'' = -g sin(theta)
    spec = models.PendulumPairSpec(M=1.0, m=2.0, theta0=0.1)
    traj = dy.simulate(models.build_pendulum_pair(spec).field, spec.initial_state(), 1e-3, 2.0)
    th = traj.states[:, 0]
    small = 0.1 * np.cos(math.sqrt(spec.g_const) * traj.times)
    assert np.abs(th - small).max() <= 2e-3


def test_pendulum_pair_momenta_relation():
    spec = models.PendulumPairSpec(theta0=0.7, x0=0.3, y0=-0.2, omega0=0.4)
    traj = dy.simulate(models.build_pendulum_pair(spec).field, spec.initial_state(), 1e-3, 1.0)
    s, dt = traj.states, np.diff(traj.times)
    worst = 0.0
    for k in range(len(dt)):
        mid = 0.5 * (s[k] + s[k + 1])
        pdot = (s[k + 1, 3:] - s[k, 3:]) / dt[k]
        worst = max(worst, abs(models.momenta_relation_residual(spec, mid, pdot)))
    assert worst <= 1e-6


def test_pendulum_pair_open():
    spec = models.PendulumPairSpec(theta0=0.2)
    model = models.build_pendulum_pair(spec, closed=False, port_efforts=lambda t: np.array([0.0, 0.0, 0.1, 0.0]))
    x0 = spec.initial_state()
    assert model.structure(x0).kind == iostruct.OBIO and effective(model, x0).is_coisotropic
    traj = dy.simulate(model.field, x0, 1e-3, 0.5)
    assert dy.power_balance(traj).max_residual <= 1e-6


def test_pendulum_rep_matches_generic_elimination():
    omega = models.canonical_form(3)
    generic = dy.KernelRep(6, -omega, np.eye(6))
    closure = dy.kernel_rep_of(models.pendulum_closure())
    for th in np.linspace(-3.0, 3.0, 7):
        fast = models.pendulum_pair_rep(th).to_structure()
        slow = dy.io_kernel_rep(generic, closure, models.pendulum_port_map(th), False).to_structure()
        assert fast.equals(slow)


def test_pendulum_spec_validation():
    with pytest.raises(ValueError):
        models.PendulumPairSpec(M=0.0)

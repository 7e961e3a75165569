"""Builders for concrete systems: port-controlled Hamiltonian systems, LC
circuits, nonholonomic mechanics, the spring pendulum and a pendulum coupled
to a free mass.

Every builder returns a :class:`Model`, a pair ``(structure, field)`` where
``structure`` maps a state to the IO structure at that state and ``field`` is
the :class:`~diracsys.dynamics.StateField` to integrate.

Canonical coordinates on T*Q are (q, p) with the symplectic form whose flat
map is ``(qdot, pdot) -> (-pdot, qdot)``, so that
``(xdot, dH) in graph(omega)`` are Hamilton's equations. On
M = TQ + T*Q with coordinates (q, v, p) the pullback of that form has flat
map ``(qdot, vdot, pdot) -> (-pdot, 0, qdot)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from . import dirac, iostruct
from . import subspace as ss
from .dirac import LinearStructure, StructureError, TwoForm
from .dynamics import KernelRep, RegularityError, StateField, io_kernel_rep, kernel_rep_of
from .iostruct import IOStructure


class Model(NamedTuple):
    structure: Callable  # state -> IOStructure
    field: StateField


def canonical_form(n: int) -> np.ndarray:
    """Flat-map matrix of the canonical form on T*R^n, coordinates (q, p)."""
    z, i = np.zeros((n, n)), np.eye(n)
    return np.block([[z, -i], [i, z]])


def poisson_matrix(n: int) -> np.ndarray:
    """Inverse of :func:`canonical_form`: xdot = J dH."""
    z, i = np.zeros((n, n)), np.eye(n)
    return np.block([[z, i], [-i, z]])


def pullback_form(n: int) -> np.ndarray:
    """Flat-map matrix of the pulled back canonical form on TQ + T*Q, coordinates (q, v, p)."""
    z, i = np.zeros((n, n)), np.eye(n)
    return np.block([[z, z, -i], [z, z, z], [i, z, z]])


def _graph_rep(mat) -> KernelRep:
    """graph of the flat map ``mat``: -mat v + alpha = 0."""
    n = mat.shape[0]
    return KernelRep(n, -mat, np.eye(n))


def _poisson_rep(j) -> KernelRep:
    """graph of the sharp map ``j``: v - j alpha = 0."""
    n = j.shape[0]
    return KernelRep(n, np.eye(n), -j)


def _checked_skew(mat, what="J"):
    mat = np.asarray(mat, dtype=float)
    if np.abs(mat + mat.T).max(initial=0.0) > 1e-10 * max(1.0, float(np.abs(mat).max(initial=0.0))):
        raise StructureError(f"{what} is not skew-symmetric")
    return mat


# ----------------------------------------------------------------------------- port-controlled


@dataclass
class PortControlledSpec:
    """xdot = J(x) dE + g(x) f,  e = g(x)^T dE.

    Args:
        n: state dimension.
        m: number of ports.
        J_at: x -> skew (n, n) matrix.
        g_at: x -> (n, m) matrix.
        energy: x -> E(x).
        gradient: x -> dE(x).
        hessian: optional x -> d^2E(x).
    """

    n: int
    m: int
    J_at: Callable
    g_at: Callable
    energy: Callable
    gradient: Callable
    hessian: Optional[Callable] = None
    constant: bool = False  # J and g do not depend on x

    def check(self, probes):
        for x in probes:
            _checked_skew(self.J_at(x))


def quadratic_port_controlled(j, g, q) -> PortControlledSpec:
    """Constant J, g and E(x) = x^T Q x / 2."""
    j = _checked_skew(j)
    g = np.asarray(g, dtype=float).reshape(j.shape[0], -1)
    q = np.asarray(q, dtype=float)
    q = 0.5 * (q + q.T)
    return PortControlledSpec(
        j.shape[0],
        g.shape[1],
        lambda x: j,
        lambda x: g,
        lambda x: 0.5 * float(x @ q @ x),
        lambda x: q @ x,
        lambda x: q,
        constant=True,
    )


def build_port_controlled(
    spec: PortControlledSpec,
    mode: str = "open",
    inputs: Optional[Callable] = None,
    d_ports: Optional[LinearStructure] = None,
) -> Model:
    """Open mode: OFIO with D_U1 = graph J and prescribed port flows ``inputs(t)``.

    Closed mode: FIO obtained by closing the ports with ``d_ports`` (default
    U2 + {0}, which gives 0 = g^T dE).
    """
    if mode not in ("open", "closed"):
        raise ValueError(f"mode must be 'open' or 'closed', got {mode!r}")
    spec.check([np.zeros(spec.n)])
    n, m = spec.n, spec.m

    def d_u1(x):
        return dirac.from_bivector(dirac.Bivector(_checked_skew(spec.J_at(x))))

    def ports_of(x, xdot):
        j, g = spec.J_at(x), np.asarray(spec.g_at(x), dtype=float).reshape(n, m)
        grad = np.asarray(spec.gradient(x), dtype=float)
        u2, *_ = np.linalg.lstsq(g, xdot - j @ grad, rcond=None)
        return u2, g.T @ grad

    if mode == "open":
        def structure(x):
            return iostruct.ofio(d_u1(x), np.reshape(spec.g_at(x), (n, m)))

        flow_forcing = None
        if inputs is not None:
            def flow_forcing(t, x):
                return np.reshape(spec.g_at(x), (n, m)) @ np.atleast_1d(inputs(t))

        fld = StateField(
            n,
            lambda x: _poisson_rep(_checked_skew(spec.J_at(x))),
            spec.energy,
            spec.gradient,
            port_extractor=ports_of,
            hessian=spec.hessian,
            flow_forcing=flow_forcing,
            constant_structure=spec.constant,
        )
        return Model(structure, fld)

    d_ports = dirac.flows_only(m) if d_ports is None else d_ports
    if d_ports.n != m or not d_ports.is_dirac:
        raise StructureError("port closure must be a Dirac structure on the port space")
    port_rep = kernel_rep_of(d_ports)

    def structure(x):
        return iostruct.interconnect(iostruct.ofio(d_u1(x), np.reshape(spec.g_at(x), (n, m))), d_ports)

    def rep_at(x):
        j = _checked_skew(spec.J_at(x))
        return io_kernel_rep(_poisson_rep(j), port_rep, np.reshape(spec.g_at(x), (n, m)), True)

    fld = StateField(
        n,
        rep_at,
        spec.energy,
        spec.gradient,
        port_extractor=ports_of,
        hessian=spec.hessian,
        constant_structure=spec.constant,
    )
    return Model(structure, fld)


# ----------------------------------------------------------------------------- LC circuits


@dataclass
class Branch:
    id: str
    kind: str  # "L", "C" or "port"
    value: Optional[float] = None


@dataclass
class Netlist:
    """Branches plus current-law rows ``kcl @ i = 0`` over all branch currents (ports included)."""

    branches: list
    kcl: np.ndarray
    ports: list = field(default_factory=list)

    def __post_init__(self):
        self.branches = [b if isinstance(b, Branch) else Branch(**b) for b in self.branches]
        self.kcl = np.atleast_2d(np.asarray(self.kcl, dtype=float))
        ids = [b.id for b in self.branches]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate branch ids")
        for b in self.branches:
            if b.kind not in ("L", "C", "port"):
                raise ValueError(f"branch {b.id}: unknown kind {b.kind!r}")
            if b.kind != "port" and not (b.value is not None and b.value > 0):
                raise ValueError(f"branch {b.id}: element value must be positive, got {b.value}")
        port_branches = [b.id for b in self.branches if b.kind == "port"]
        if not self.ports:
            self.ports = port_branches
        if sorted(self.ports) != sorted(port_branches):
            raise ValueError(f"ports {self.ports} do not match port branches {port_branches}")
        if self.kcl.size and self.kcl.shape[1] != len(self.branches):
            raise ValueError(f"kcl has {self.kcl.shape[1]} columns for {len(self.branches)} branches")
        if self.kcl.size and np.linalg.matrix_rank(self.kcl) != self.kcl.shape[0]:
            raise ValueError("inconsistent KCL: rows are not independent")
        if not self.elements:
            raise ValueError("netlist has no L or C elements")
        kp = self.port_matrix
        if kp.shape[1] and np.linalg.matrix_rank(kp) != kp.shape[1]:
            raise ValueError("inconsistent KCL: port currents are not determined by element currents")

    @property
    def elements(self) -> list:
        return [b for b in self.branches if b.kind != "port"]

    def _columns(self, ids):
        index = {b.id: k for k, b in enumerate(self.branches)}
        if not self.kcl.size:
            return np.zeros((0, len(ids)))
        return self.kcl[:, [index[i] for i in ids]]

    @property
    def element_matrix(self) -> np.ndarray:
        return self._columns([b.id for b in self.elements])

    @property
    def port_matrix(self) -> np.ndarray:
        return self._columns(self.ports)

    def distribution(self) -> ss.Subspace:
        """Element currents compatible with the current law for some port currents."""
        ke, kp = self.element_matrix, self.port_matrix
        ne = ke.shape[1]
        if ke.shape[0] == 0:
            return ss.full(ne)
        left = ss.null_space(kp.T) if kp.shape[1] else np.eye(ke.shape[0])
        rows = left.T @ ke
        return ss.Subspace(ne, ss.null_space(rows)) if rows.size else ss.full(ne)

    def port_current_map(self) -> np.ndarray:
        """Port currents as a linear function of element currents, f = -K_p^+ K_e v."""
        kp = self.port_matrix
        if kp.shape[1] == 0:
            return np.zeros((0, len(self.elements)))
        return -np.linalg.pinv(kp) @ self.element_matrix

    def to_json(self) -> dict:
        return {
            "branches": [
                {"id": b.id, "kind": b.kind, **({} if b.value is None else {"value": b.value})} for b in self.branches
            ],
            "kcl": self.kcl.tolist(),
            "ports": list(self.ports),
        }

    @classmethod
    def from_json(cls, data) -> "Netlist":
        if isinstance(data, str):
            data = json.loads(data)
        try:
            return cls(data["branches"], data.get("kcl", []), data.get("ports", []))
        except (KeyError, TypeError) as err:
            raise ValueError(f"malformed netlist: {err}") from err


def lc_energy(netlist: Netlist):
    """E(q, v, p) = p.v - L(q, v) with L = sum L_i v_i^2 / 2 - sum q_j^2 / (2 C_j); returns (E, dE, d2E)."""
    els = netlist.elements
    ne = len(els)
    ind = np.array([b.value if b.kind == "L" else 0.0 for b in els])
    cinv = np.array([1.0 / b.value if b.kind == "C" else 0.0 for b in els])
    hess = np.block(
        [
            [np.diag(cinv), np.zeros((ne, ne)), np.zeros((ne, ne))],
            [np.zeros((ne, ne)), -np.diag(ind), np.eye(ne)],
            [np.zeros((ne, ne)), np.eye(ne), np.zeros((ne, ne))],
        ]
    )

    def energy(x):
        return 0.5 * float(x @ hess @ x)

    def gradient(x):
        return hess @ x

    return energy, gradient, (lambda x: hess)


def lc_dirac(distribution: ss.Subspace) -> LinearStructure:
    """D_1 on M = TQ + T*Q: the pulled back canonical form on {(qdot, vdot, pdot) : qdot in Delta}."""
    ne = distribution.ambient_dim
    base = np.block(
        [
            [distribution.basis, np.zeros((ne, 2 * ne))],
            [np.zeros((2 * ne, distribution.rank)), np.eye(2 * ne)],
        ]
    )
    return dirac.from_pair(ss.canonicalize(base), TwoForm(pullback_form(ne)))


def lc_port_map(netlist: Netlist) -> np.ndarray:
    """p_A: (qdot, vdot, pdot) -> port currents."""
    pc = netlist.port_current_map()
    ne = len(netlist.elements)
    return np.hstack([pc, np.zeros((pc.shape[0], 2 * ne))])


def lc_consistent_state(netlist: Netlist, q, v) -> np.ndarray:
    """State (q, v, p) with p = dL/dv; ``v`` must satisfy the current law."""
    ind = np.array([b.value if b.kind == "L" else 0.0 for b in netlist.elements])
    q, v = np.asarray(q, dtype=float), np.asarray(v, dtype=float)
    return np.concatenate([q, v, ind * v])


def build_lc(
    netlist: Netlist,
    port_closure: Optional[LinearStructure] = None,
    port_efforts: Optional[Callable] = None,
) -> Model:
    """OBIO for a netlist with ports, BIO after closing them with ``port_closure``.

    ``port_efforts(t)`` prescribes port voltages of the open circuit; they
    enter the equations as ``dE - p_A^* e``.
    """
    ne = len(netlist.elements)
    n = 3 * ne
    np_ = len(netlist.ports)
    delta = netlist.distribution()
    d1 = lc_dirac(delta)
    p_map = lc_port_map(netlist)
    energy, gradient, hessian = lc_energy(netlist)

    if port_closure is not None:
        if np_ == 0:
            raise ValueError("netlist has no ports to close")
        if port_closure.n != np_ or not port_closure.is_dirac:
            raise StructureError("port closure must be a Dirac structure on the port space")
        io = iostruct.bio(d1, port_closure, p_map)
        rep = io_kernel_rep(kernel_rep_of(d1), kernel_rep_of(port_closure), p_map, False)
    else:
        io = iostruct.obio(d1, p_map) if np_ else iostruct.bio(d1, dirac.trivial(), p_map)
        rep = kernel_rep_of(d1)

    efforts = None
    extractor = None
    if np_:
        if port_closure is None and port_efforts is not None:
            def efforts(t, x):
                return p_map.T @ np.atleast_1d(port_efforts(t))

        def extractor(x, xdot):
            return p_map @ xdot, _port_efforts(x, xdot, gradient, d1, p_map)

    fld = StateField(
        n,
        lambda x: rep,
        energy,
        gradient,
        port_extractor=extractor,
        hessian=hessian,
        effort_forcing=efforts,
        constant_structure=True,
    )
    return Model(lambda x: io, fld)


def _port_efforts(x, xdot, gradient, d1, p_map):
    """Port efforts e with (xdot, dE - p^* e) in D_1, by least squares.

    Any remaining freedom in e pairs to zero with the port flows.
    """
    grad = gradient(x)
    n = d1.n
    off = np.eye(2 * n) - d1.span.projector
    e, *_ = np.linalg.lstsq(off[:, n:] @ (-p_map.T), -off @ np.concatenate([xdot, grad]), rcond=None)
    return e


# ----------------------------------------------------------------------------- nonholonomic


@dataclass
class NonholonomicSpec:
    """Hamiltonian H(q, p) on T*R^n with constraint one-forms mu(q) (k x n), mu(q) dH/dp = 0."""

    config_dim: int
    hamiltonian: Callable  # x = (q, p) -> H
    gradient: Callable
    mu_at: Callable  # q -> (k, n)
    hessian: Optional[Callable] = None

    def mu(self, q) -> np.ndarray:
        return np.atleast_2d(np.asarray(self.mu_at(q), dtype=float)).reshape(-1, self.config_dim)


def nonholonomic_particle() -> NonholonomicSpec:
    """Free particle in R^3, H = |p|^2 / 2, constraint dz - y dx."""
    return NonholonomicSpec(
        3,
        lambda x: 0.5 * float(x[3:] @ x[3:]),
        lambda x: np.concatenate([np.zeros(3), x[3:]]),
        lambda q: np.array([[-q[1], 0.0, 1.0]]),
        lambda x: np.block([[np.zeros((3, 3)), np.zeros((3, 3))], [np.zeros((3, 3)), np.eye(3)]]),
    )


def build_nonholonomic(spec: NonholonomicSpec) -> Model:
    """FIO with D_U1 = graph(omega), D_U2 = U2 + {0} and g(lambda) = (0, mu^T lambda).

    The port flow u2 is the multiplier lambda; the port effort mu dH/dp vanishes.
    """
    nq = spec.config_dim
    n = 2 * nq
    j = poisson_matrix(nq)
    omega = canonical_form(nq)
    k = spec.mu(np.zeros(nq)).shape[0]
    zero_q = np.zeros((nq, nq))

    def g_at(x):
        return np.vstack([np.zeros((nq, k)), spec.mu(x[:nq]).T])

    def rep_at(x):
        mu = spec.mu(x[:nq])
        _, s, vh = np.linalg.svd(mu)
        if k and (s.size < k or s[-1] <= 1e-10 * max(1.0, s[0])):
            raise RegularityError("constraint one-forms are linearly dependent", x)
        null = vh[k:].T
        left = np.block([[np.eye(nq), np.zeros((nq, null.shape[1]))], [zero_q, null]])
        g = g_at(x)
        flow = np.vstack([left.T, np.zeros((k, n))])
        effort = np.vstack([-left.T @ j, g.T])
        return KernelRep(n, flow, effort)

    def structure(x):
        d_u1 = dirac.from_form(TwoForm(omega))
        return iostruct.fio(d_u1, dirac.flows_only(k), g_at(x))

    def extractor(x, xdot):
        grad = spec.gradient(x)
        g = g_at(x)
        lam, *_ = np.linalg.lstsq(g, xdot - j @ grad, rcond=None)
        return lam, g.T @ grad

    fld = StateField(n, rep_at, spec.hamiltonian, spec.gradient, port_extractor=extractor, hessian=spec.hessian)
    return Model(structure, fld)


def constraint_residual(spec: NonholonomicSpec, x) -> float:
    x = np.asarray(x, dtype=float)
    nq = spec.config_dim
    return float(np.abs(spec.mu(x[:nq]) @ spec.gradient(x)[nq:]).max(initial=0.0))


# ----------------------------------------------------------------------------- spring pendulum


def build_spring_pendulum(k: float, r0: float, m: float, force=(0.0, 0.0)) -> Model:
    """OFIO on M = TQ + T*Q, Q = (r, theta), with the force entering as g_A(F) = (0, 0, F).

    State x = (r, theta, v_r, v_theta, p_r, p_theta).
    """
    if not (k > 0 and r0 > 0 and m > 0):
        raise ValueError("k, r0 and m must be positive")
    force = np.asarray(force, dtype=float).reshape(2)
    form = pullback_form(2)
    d1 = dirac.from_form(TwoForm(form))
    g = np.vstack([np.zeros((4, 2)), np.eye(2)])
    rep = _graph_rep(form)

    def energy(x):
        r, _, vr, vt, pr, pt = x
        return pr * vr + pt * vt - 0.5 * m * (vr**2 + r**2 * vt**2) + 0.5 * k * (r - r0) ** 2

    def gradient(x):
        r, _, vr, vt, pr, pt = x
        return np.array([-m * r * vt**2 + k * (r - r0), 0.0, pr - m * vr, pt - m * r**2 * vt, vr, vt])

    def hessian(x):
        r, _, vr, vt, pr, pt = x
        h = np.zeros((6, 6))
        h[0, 0] = -m * vt**2 + k
        h[0, 3] = h[3, 0] = -2 * m * r * vt
        h[2, 2] = -m
        h[3, 3] = -m * r**2
        h[2, 4] = h[4, 2] = 1.0
        h[3, 5] = h[5, 3] = 1.0
        return h

    def extractor(x, xdot):
        return force.copy(), g.T @ gradient(x)

    fld = StateField(
        6,
        lambda x: rep,
        energy,
        gradient,
        port_extractor=extractor,
        hessian=hessian,
        flow_forcing=lambda t, x: g @ force,
        constant_structure=True,
    )
    io = iostruct.ofio(d1, g)
    return Model(lambda x: io, fld)


def spring_pendulum_state(m: float, r, theta, vr, vtheta) -> np.ndarray:
    return np.array([r, theta, vr, vtheta, m * vr, m * r**2 * vtheta], dtype=float)


def spring_lagrangian_dtheta(x) -> float:
    """dL/dtheta, identically zero for the spring pendulum."""
    return 0.0


# ----------------------------------------------------------------------------- pendulum pair


@dataclass
class PendulumPairSpec:
    """Pendulum of mass M on a unit rod plus a free mass m, both under gravity g_const.

    y points down, so H = p_th^2/2M + |p_xy|^2/2m - M g cos(theta) - m g y.
    The initial momenta default to the ones compatible with the closed
    coupling for the angular velocity ``omega0``.
    """

    M: float = 1.0
    m: float = 1.0
    g_const: float = 9.81
    theta0: float = 0.3
    x0: Optional[float] = None
    y0: Optional[float] = None
    omega0: float = 0.0
    momenta: Optional[tuple] = None

    def __post_init__(self):
        if not (self.M > 0 and self.m > 0 and self.g_const > 0):
            raise ValueError("masses and gravity must be positive")
        if self.x0 is None:
            self.x0 = float(np.sin(self.theta0))
        if self.y0 is None:
            self.y0 = float(np.cos(self.theta0))

    def initial_state(self) -> np.ndarray:
        th = self.theta0
        if self.momenta is not None:
            p = np.asarray(self.momenta, dtype=float).reshape(3)
        else:
            w = self.omega0
            p = np.array([self.M * w, self.m * w * np.cos(th), -self.m * w * np.sin(th)])
        return np.concatenate([[th, self.x0, self.y0], p])


def pendulum_port_map(theta: float) -> np.ndarray:
    """p_A: (thdot, xdot, ydot, pdots) -> (thdot cos, -thdot sin, xdot, ydot)."""
    p = np.zeros((4, 6))
    p[0, 0] = np.cos(theta)
    p[1, 0] = -np.sin(theta)
    p[2, 1] = 1.0
    p[3, 2] = 1.0
    return p


def pendulum_closure() -> LinearStructure:
    """{f1 = f3, f2 = f4, e1 = -e3, e2 = -e4} on R^4."""
    basis = np.array(
        [
            [1, 0, 1, 0, 0, 0, 0, 0],
            [0, 1, 0, 1, 0, 0, 0, 0],
            [0, 0, 0, 0, 1, 0, -1, 0],
            [0, 0, 0, 0, 0, 1, 0, -1],
        ],
        dtype=float,
    ).T
    return LinearStructure(4, ss.canonicalize(basis))


def build_pendulum_pair(spec: PendulumPairSpec, closed: bool = True, port_efforts: Optional[Callable] = None) -> Model:
    """OBIO (open) or BIO (closed with :func:`pendulum_closure`) on T*Q, Q = S^1 x R^2.

    State x = (theta, x, y, p_theta, p_x, p_y).
    """
    big_m, m, gc = spec.M, spec.m, spec.g_const
    omega = canonical_form(3)
    d1 = dirac.from_form(TwoForm(omega))
    rep1 = _graph_rep(omega)
    closure = pendulum_closure()
    rep2 = kernel_rep_of(closure)
    inv_mass = np.array([1 / big_m, 1 / m, 1 / m])

    def energy(x):
        th, _, y, pt, px, py = x
        return pt**2 / (2 * big_m) + (px**2 + py**2) / (2 * m) - big_m * gc * np.cos(th) - m * gc * y

    def gradient(x):
        th = x[0]
        return np.concatenate([[big_m * gc * np.sin(th), 0.0, -m * gc], inv_mass * x[3:]])

    def hessian(x):
        h = np.zeros((6, 6))
        h[0, 0] = big_m * gc * np.cos(x[0])
        h[3:, 3:] = np.diag(inv_mass)
        return h

    def port_efforts_of(x, xdot):
        """Efforts e with (xdot, dE - p^T e) in graph(omega); exact for solutions."""
        p = pendulum_port_map(x[0])
        resid = gradient(x) - omega @ xdot
        e, *_ = np.linalg.lstsq(p.T, resid, rcond=None)
        return e

    def extractor(x, xdot):
        return pendulum_port_map(x[0]) @ xdot, port_efforts_of(x, xdot)

    if closed:
        def structure(x):
            return iostruct.bio(d1, closure, pendulum_port_map(x[0]))

        def rep_at(x):
            return pendulum_pair_rep(x[0])

        fld = StateField(6, rep_at, energy, gradient, port_extractor=extractor, hessian=hessian)
        return Model(structure, fld)

    def structure(x):
        return iostruct.obio(d1, pendulum_port_map(x[0]))

    forcing = None
    if port_efforts is not None:
        def forcing(t, x):
            return pendulum_port_map(x[0]).T @ np.atleast_1d(port_efforts(t))

    fld = StateField(
        6, lambda x: rep1, energy, gradient, port_extractor=extractor, hessian=hessian, effort_forcing=forcing,
        constant_structure=True,
    )
    return Model(structure, fld)


_OMEGA3 = canonical_form(3)


def pendulum_pair_rep(theta: float) -> KernelRep:
    """Kernel rep of the closed pendulum pair at angle theta.

    With w = (cos, -1, 0, 0, 0, 0) and w' = (-sin, 0, -1, 0, 0, 0) the flows
    satisfy w.v = w'.v = 0 and alpha - omega v must lie in span{w, w'}.
    """
    c, s = np.cos(theta), np.sin(theta)
    omega = _OMEGA3
    w = np.array([[c, -1.0, 0, 0, 0, 0], [-s, 0, -1.0, 0, 0, 0]])
    perp = np.zeros((4, 6))
    perp[0, :3] = (1.0, c, -s)
    perp[1:, 3:] = np.eye(3)
    flow = np.vstack([w, -perp @ omega])
    effort = np.vstack([np.zeros((2, 6)), perp])
    return KernelRep(6, flow, effort)


def momenta_relation_residual(spec: PendulumPairSpec, x_mid, pdot) -> float:
    """pdot_th + (M + m) g sin(th) + pdot_x cos(th) - pdot_y sin(th)."""
    th = x_mid[0]
    return float(pdot[0] + (spec.M + spec.m) * spec.g_const * np.sin(th) + pdot[1] * np.cos(th) - pdot[2] * np.sin(th))

"""Time integration of Dirac systems  xdot + dE(x) in D_x.

Each fiber D_x is given by a kernel representation
``flow_mat @ v + effort_mat @ alpha = 0``. Write G_x = {v : (v, 0) in D_x}
(the flows that need no effort). Solutions exist at x only when dE(x)
annihilates G_x; this is the algebraic part of the DAE, and the component of
xdot along G_x is the multiplier part.

The midpoint scheme solves, for the unknown endpoint y with x_m = (x + y)/2
and v = (y - x)/dt,

    flow_mat(x_m) (v - f) + effort_mat(x_m) (I - P_G(x_m)) (dE(x_m) - e) = 0
    P_G(y) (dE(y) - e) = 0

so the algebraic constraint holds exactly at every accepted state. ``f`` and
``e`` are optional flow and effort forcings (prescribed port inputs).
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import subspace as ss
from .dirac import LinearStructure, StructureError, range_and_form

NEWTON_TOL = 1e-10
NEWTON_MAXIT = 50
STEP_RESIDUAL_TOL = 1e-9
CONSISTENCY_TOL = 1e-6
DIRAC_TOL = 1e-10
SCHEMES = ("midpoint", "rk4")
FRAME_MEMO = 8
TRAJECTORY_SCHEMA = "diracsys.trajectory/1"


class DynamicsError(RuntimeError):
    """Base class for integration failures; carries the offending state and step index."""

    def __init__(self, message, state=None, step_index=None, residual=None):
        super().__init__(message)
        self.state = None if state is None else np.array(state, dtype=float)
        self.step_index = step_index
        self.residual = residual

    def __str__(self):
        msg = super().__str__()
        if self.step_index is not None:
            msg = f"step {self.step_index}: {msg}"
        return msg


class InconsistentDAEError(DynamicsError):
    """No velocity satisfies the DAE at the given state."""


class RegularityError(DynamicsError):
    """The fiber structure changed rank or the discrete equations could not be solved."""


# ----------------------------------------------------------------------------- kernel reps


@dataclass(frozen=True, eq=False)
class KernelRep:
    """D = {(v, alpha) : flow_mat @ v + effort_mat @ alpha = 0}."""

    n: int
    flow_mat: np.ndarray
    effort_mat: np.ndarray

    def __post_init__(self):
        f = np.array(self.flow_mat, dtype=float).reshape(-1, self.n)
        e = np.array(self.effort_mat, dtype=float).reshape(-1, self.n)
        if f.shape != e.shape:
            raise ValueError(f"flow_mat {f.shape} and effort_mat {e.shape} differ in shape")
        object.__setattr__(self, "flow_mat", f)
        object.__setattr__(self, "effort_mat", e)

    @property
    def rows(self) -> np.ndarray:
        return np.hstack([self.flow_mat, self.effort_mat])

    @property
    def m(self) -> int:
        return self.flow_mat.shape[0]

    def rank(self) -> int:
        return self.n * 2 - ss.null_space(self.rows).shape[1]

    def dirac_defect(self) -> float:
        """max |F E^T + E F^T| for row-normalized matrices."""
        rows = self.rows
        norms = np.linalg.norm(rows, axis=1)
        norms[norms == 0] = 1.0
        f = self.flow_mat / norms[:, None]
        e = self.effort_mat / norms[:, None]
        return float(np.abs(f @ e.T + e @ f.T).max(initial=0.0))

    def is_dirac(self, tol=DIRAC_TOL) -> bool:
        return self.m == self.n and self.rank() == self.n and self.dirac_defect() <= tol

    def to_structure(self) -> LinearStructure:
        return LinearStructure(self.n, ss.Subspace(2 * self.n, ss.null_space(self.rows)))

    def canonical(self) -> "KernelRep":
        """Same subspace with orthonormal rows."""
        rows = ss.orthogonal_complement(self.to_structure().span).basis.T
        return KernelRep(self.n, rows[:, : self.n], rows[:, self.n :])


def kernel_rep_of(d: LinearStructure) -> KernelRep:
    """Kernel representation of a Dirac structure.

    Rows come in two groups: an annihilator basis C of F_D acting on flows
    (C^T v = 0) and a basis Q of F_D acting on efforts
    (Q^T alpha = omega_D Q^T v). When F_D is everything the second group is
    rotated back to ``(-omega, I)``.
    """
    if not d.is_dirac:
        raise StructureError(f"kernel representation needs a Dirac structure, got {d.class_tag}")
    n = d.n
    f, omega = range_and_form(d)
    q = f.basis
    c = ss.annihilator(f).basis
    flow_a = c.T
    effort_a = np.zeros((c.shape[1], n))
    if f.rank == n:
        flow_b = -(q @ omega.mat @ q.T)
        effort_b = np.eye(n)
    else:
        flow_b = -(omega.mat @ q.T)
        effort_b = q.T
    return KernelRep(n, np.vstack([flow_a, flow_b]), np.vstack([effort_a, effort_b]))


def eliminate(a: np.ndarray, b: np.ndarray, n: int) -> KernelRep:
    """Kernel rep of {(v, alpha) : A (v, alpha) + B z = 0 for some z}.

    Rows are N^T A with N spanning the left null space of B, reduced to an
    orthonormal basis of their row space.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float).reshape(a.shape[0], -1)
    left = ss.null_space(b.T, scale=1.0)
    rows = left.T @ a
    _, s, vh = np.linalg.svd(rows, full_matrices=False)
    r = int(np.sum(s > ss.get_policy().rank_rtol * max(s[0] if s.size else 0.0, 1.0)))
    rows = vh[:r]
    return KernelRep(n, rows[:, :n], rows[:, n:])


def io_kernel_rep(rep_u1: KernelRep, rep_u2: KernelRep, coupling, forward_kind: bool) -> KernelRep:
    """Kernel rep of the effective structure of an IO structure, from kernel reps of its parts.

    Forward kinds: z = u2 with (u1 - g u2, alpha1) in D1 and (u2, g^T alpha1) in D2.
    Backward kinds: z = w2 with (u1, alpha1 - p^T w2) in D1 and (p u1, w2) in D2.
    """
    f1, e1 = rep_u1.flow_mat, rep_u1.effort_mat
    f2, e2 = rep_u2.flow_mat, rep_u2.effort_mat
    c = np.asarray(coupling, dtype=float)
    n1 = rep_u1.n
    if forward_kind:
        a = np.block([[f1, e1], [np.zeros((f2.shape[0], n1)), e2 @ c.T]])
        b = np.vstack([-f1 @ c, f2])
    else:
        a = np.block([[f1, e1], [f2 @ c, np.zeros((f2.shape[0], n1))]])
        b = np.vstack([-e1 @ c.T, e2])
    return eliminate(a, b, n1)


# ----------------------------------------------------------------------------- fields


@dataclass(eq=False)
class StateField:
    """A state-dependent Dirac structure plus an energy.

    Args:
        n: state dimension.
        structure_at: x -> KernelRep of D_x.
        energy: x -> E(x).
        gradient: x -> dE(x).
        port_extractor: (x, xdot) -> (u2, alpha2), evaluated at stage points.
        hessian: optional x -> d^2E(x); finite differences of ``gradient`` otherwise.
        flow_forcing: optional (t, x) -> f, shifting xdot to xdot - f.
        effort_forcing: optional (t, x) -> e, shifting dE to dE - e.
        constant_structure: D_x does not depend on x (evaluated once).
    """

    n: int
    structure_at: Callable
    energy: Callable
    gradient: Callable
    port_extractor: Optional[Callable] = None
    hessian: Optional[Callable] = None
    flow_forcing: Optional[Callable] = None
    effort_forcing: Optional[Callable] = None
    constant_structure: bool = False
    _frame_cache: Optional["_Frame"] = field(default=None, init=False, repr=False)
    _recent_frames: dict = field(default_factory=dict, init=False, repr=False)

    def frame(self, x, validate: bool = False) -> "_Frame":
        if self.constant_structure:
            if self._frame_cache is None:
                self._frame_cache = _Frame.build(self.structure_at(x), self.n, validate=True)
            return self._frame_cache
        # small memo: the same states are revisited within and across steps
        key = np.asarray(x, dtype=float).tobytes()
        cache = self._recent_frames
        fr = cache.get(key)
        if fr is not None and (fr.validated or not validate):
            return fr
        if fr is not None:
            fr = _Frame.build(fr.rep, self.n, validate=True)
        else:
            fr = _Frame.build(self.structure_at(x), self.n, validate)
        cache[key] = fr
        if len(cache) > FRAME_MEMO:
            cache.pop(next(iter(cache)))
        return fr

    def effective_gradient(self, t, x) -> np.ndarray:
        g = np.asarray(self.gradient(x), dtype=float)
        if self.effort_forcing is not None:
            g = g - np.asarray(self.effort_forcing(t, x), dtype=float)
        return g

    def forcing(self, t, x):
        if self.flow_forcing is None:
            return 0.0
        return np.asarray(self.flow_forcing(t, x), dtype=float)

    def hess(self, x) -> np.ndarray:
        if self.hessian is not None:
            return np.asarray(self.hessian(x), dtype=float)
        x = np.asarray(x, dtype=float)
        h = 1e-6 * max(1.0, float(np.abs(x).max(initial=0.0)))
        cols = []
        for i in range(self.n):
            dx = np.zeros(self.n)
            dx[i] = h
            cols.append((np.asarray(self.gradient(x + dx)) - np.asarray(self.gradient(x - dx))) / (2 * h))
        out = np.column_stack(cols) if cols else np.zeros((0, 0))
        return 0.5 * (out + out.T)

    def gradient_defect(self, x, h=1e-6) -> float:
        """Relative mismatch between ``gradient`` and central differences of ``energy``."""
        x = np.asarray(x, dtype=float)
        g = np.asarray(self.gradient(x), dtype=float)
        fd = np.empty(self.n)
        for i in range(self.n):
            dx = np.zeros(self.n)
            dx[i] = h
            fd[i] = (self.energy(x + dx) - self.energy(x - dx)) / (2 * h)
        return float(np.linalg.norm(g - fd) / max(1.0, np.linalg.norm(g)))

    def consistency_residual(self, t, x) -> float:
        fr = self.frame(x)
        return float(np.linalg.norm(fr.g_basis.T @ self.effective_gradient(t, x)))


@dataclass(frozen=True, eq=False)
class _Frame:
    rep: KernelRep
    g_basis: np.ndarray  # orthonormal basis of G = ker flow_mat
    validated: bool

    @classmethod
    def build(cls, rep: KernelRep, n: int, validate: bool = False) -> "_Frame":
        """Frame of a fiber structure; ``validate`` also checks the Dirac and rank conditions."""
        if rep.n != n:
            raise RegularityError(f"structure has dimension {rep.n}, state has {n}")
        scale = float(np.sqrt((rep.flow_mat**2).sum(axis=1) + (rep.effort_mat**2).sum(axis=1)).max(initial=1.0))
        if validate:
            defect = rep.dirac_defect()
            if rep.m != n or defect > DIRAC_TOL:
                raise RegularityError(f"fiber structure is not Dirac (rows {rep.m}, defect {defect:.2e})")
            rank = 2 * n - ss.null_space(rep.rows, scale=scale).shape[1]
            if rank != n:
                raise RegularityError(f"kernel representation has rank {rank}, expected {n}")
        g = ss.null_space(rep.flow_mat, scale=scale)
        return cls(rep, g, validate)

    @property
    def g_dim(self) -> int:
        return self.g_basis.shape[1]

    def admissible(self, grad) -> np.ndarray:
        g = self.g_basis
        return grad - g @ (g.T @ grad)


def _check_regular(frames, x, step_index=None):
    dims = {fr.g_dim for fr in frames}
    if len(dims) != 1:
        raise RegularityError(f"dimension of the effortless flow space changed: {sorted(dims)}", x, step_index)


@dataclass
class StepDiagnostics:
    residual: float
    consistency_residual: float
    iterations: int
    multiplier_dim: int
    stage_state: np.ndarray
    stage_velocity: np.ndarray


def velocity(fld: StateField, t: float, x) -> np.ndarray:
    """Minimum-norm admissible velocity at x, completed along G by the hidden constraint.

    The component along G is fixed by requiring that the algebraic constraint
    P_G (dE - e) = 0 is preserved to first order; its directional derivatives
    are taken by central differences.
    """
    x = np.asarray(x, dtype=float)
    fr = fld.frame(x)
    grad = fld.effective_gradient(t, x)
    adm = fr.admissible(grad)
    rep = fr.rep
    v0, *_ = np.linalg.lstsq(rep.flow_mat, -rep.effort_mat @ adm, rcond=None)
    v0 = v0 + fld.forcing(t, x)
    g = fr.g_basis
    if g.shape[1] == 0:
        return v0

    def constraint(tt, xx):
        frx = fld.frame(xx)
        return frx.g_basis @ (frx.g_basis.T @ fld.effective_gradient(tt, xx))

    h = 1e-6 * max(1.0, float(np.linalg.norm(x)))

    def directional(vec):
        nv = float(np.linalg.norm(vec))
        if nv == 0.0:
            return np.zeros(fld.n)
        step = h / nv
        return (constraint(t, x + step * vec) - constraint(t, x - step * vec)) / (2 * step)

    dt_part = np.zeros(fld.n)
    if fld.effort_forcing is not None or fld.flow_forcing is not None:
        dt_part = (constraint(t + h, x) - constraint(t - h, x)) / (2 * h)
    lhs = np.column_stack([directional(g[:, i]) for i in range(g.shape[1])])
    rhs = -(directional(v0) + dt_part)
    w, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    return v0 + g @ w


def _midpoint(fld: StateField, t, x, dt, step_index, guess=None):
    n = fld.n
    tm, t1 = t + 0.5 * dt, t + dt
    hess = fld.hess(x)
    eye = np.eye(n)
    y = x.copy() if guess is None else x + dt * np.asarray(guess, dtype=float)
    res = math.inf
    for it in range(1, NEWTON_MAXIT + 1):
        xm = 0.5 * (x + y)
        v = (y - x) / dt
        fm = fld.frame(xm)
        fy = fm if fld.constant_structure else fld.frame(y)
        grad_m = fld.effective_gradient(tm, xm)
        adm = fm.admissible(grad_m)
        rep = fm.rep
        r1 = rep.flow_mat @ (v - fld.forcing(tm, xm)) + rep.effort_mat @ adm
        gy = fy.g_basis
        r2 = gy.T @ fld.effective_gradient(t1, y)
        r = np.concatenate([r1, r2])
        res = float(np.linalg.norm(r))
        if not math.isfinite(res):
            raise RegularityError("midpoint residual is not finite", x, step_index, res)
        scale = max(1.0, float(np.linalg.norm(rep.effort_mat @ adm)))
        if res <= NEWTON_TOL * scale:
            break
        p_adm = eye - fm.g_basis @ fm.g_basis.T
        jac = np.vstack([rep.flow_mat / dt + 0.5 * rep.effort_mat @ p_adm @ hess, gy.T @ hess])
        delta, *_ = np.linalg.lstsq(jac, -r, rcond=None)
        y = y + delta
    else:
        if res > STEP_RESIDUAL_TOL * scale:
            raise RegularityError(f"midpoint iteration did not converge (residual {res:.3e})", x, step_index, res)
    fm = fld.frame(xm, validate=True)
    _check_regular([fld.frame(x), fm, fy], x, step_index)
    return y, StepDiagnostics(res, float(np.linalg.norm(r2)), it, fm.g_dim, xm, v)


def project_consistent(fld: StateField, t, x, tol=1e-12, maxit=50) -> np.ndarray:
    """Least-squares projection of x onto the algebraic constraint set P_G (dE - e) = 0."""
    x = np.array(x, dtype=float)
    h = 1e-7 * max(1.0, float(np.linalg.norm(x)))

    def c(xx):
        frx = fld.frame(xx)
        return frx.g_basis @ (frx.g_basis.T @ fld.effective_gradient(t, xx))

    for _ in range(maxit):
        cx = c(x)
        if np.linalg.norm(cx) <= tol:
            break
        jac = np.column_stack([(c(x + h * e) - c(x - h * e)) / (2 * h) for e in np.eye(fld.n)])
        delta, *_ = np.linalg.lstsq(jac, -cx, rcond=None)
        x = x + delta
    return x


def _rk4(fld: StateField, t, x, dt, step_index):
    k1 = velocity(fld, t, x)
    k2 = velocity(fld, t + dt / 2, x + dt / 2 * k1)
    k3 = velocity(fld, t + dt / 2, x + dt / 2 * k2)
    k4 = velocity(fld, t + dt, x + dt * k3)
    y = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    frames = [fld.frame(x)]
    if frames[0].g_dim:
        y = _project_along_g(fld, t + dt, y)
    fy = fld.frame(y)
    frames.append(fy)
    _check_regular(frames, x, step_index)
    cres = float(np.linalg.norm(fy.g_basis.T @ fld.effective_gradient(t + dt, y)))
    return y, StepDiagnostics(0.0, cres, 1, fy.g_dim, 0.5 * (x + y), (y - x) / dt)


def _project_along_g(fld, t, y, maxit=20):
    """Newton correction of the algebraic constraint moving only along G."""
    for _ in range(maxit):
        fr = fld.frame(y)
        g = fr.g_basis
        c = g.T @ fld.effective_gradient(t, y)
        if np.linalg.norm(c) <= NEWTON_TOL:
            break
        jac = g.T @ fld.hess(y) @ g
        w, *_ = np.linalg.lstsq(jac, -c, rcond=None)
        y = y + g @ w
    return y


def step(
    fld: StateField,
    x,
    dt: float,
    scheme: str = "midpoint",
    t: float = 0.0,
    step_index=None,
    guess=None,
    consistency_tol: float = CONSISTENCY_TOL,
):
    """Advance one step; returns (x_next, StepDiagnostics).

    ``guess`` is an optional velocity used as the starting point of the
    midpoint iteration (the previous step's velocity is a good choice).
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    x = np.array(x, dtype=float)
    cres = fld.consistency_residual(t, x)
    if cres > consistency_tol:
        raise InconsistentDAEError(f"state violates the algebraic constraint (residual {cres:.3e})", x, step_index, cres)
    if scheme == "midpoint":
        y, diag = _midpoint(fld, t, x, dt, step_index, guess)
    else:
        y, diag = _rk4(fld, t, x, dt, step_index)
    if not (np.all(np.isfinite(y)) and math.isfinite(float(fld.energy(y)))):
        raise RegularityError("integration produced a non-finite state", x, step_index, math.inf)
    return y, diag


# ----------------------------------------------------------------------------- trajectories


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    energies: np.ndarray
    consistency_residuals: np.ndarray
    port_trace: Optional[list] = None  # (u2, alpha2) per state; entry k>0 at the stage point of step k
    power_residuals: Optional[np.ndarray] = None  # NaN for the initial state

    def __len__(self):
        return len(self.times)

    def csv_header(self) -> list:
        n = self.states.shape[1]
        cols = ["t", *[f"x{i}" for i in range(n)], "E", "consistency_residual"]
        if self.power_residuals is not None:
            cols.append("power_residual")
        return cols

    def to_csv(self, out=None) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.csv_header()) + "\n")
        for k in range(len(self.times)):
            vals = [self.times[k], *self.states[k], self.energies[k], self.consistency_residuals[k]]
            if self.power_residuals is not None:
                vals.append(self.power_residuals[k])
            buf.write(",".join(format(float(v), ".17g") for v in vals) + "\n")
        text = buf.getvalue()
        if out is not None:
            with open(out, "w") as fh:
                fh.write(text)
        return text

    def to_json(self) -> dict:
        def clean(a):
            return [None if (isinstance(v, float) and math.isnan(v)) else v for v in np.asarray(a).tolist()]

        out = {
            "schema": TRAJECTORY_SCHEMA,
            "times": self.times.tolist(),
            "states": self.states.tolist(),
            "energies": self.energies.tolist(),
            "consistency_residuals": self.consistency_residuals.tolist(),
        }
        if self.port_trace is not None:
            out["port_trace"] = [[np.asarray(u).tolist(), np.asarray(a).tolist()] for u, a in self.port_trace]
        if self.power_residuals is not None:
            out["power_residuals"] = clean(self.power_residuals)
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def _ports(fld, x, xdot):
    u, a = fld.port_extractor(x, xdot)
    return np.atleast_1d(np.asarray(u, dtype=float)), np.atleast_1d(np.asarray(a, dtype=float))


def simulate(
    fld: StateField,
    x0,
    dt: float,
    t_final: float,
    scheme: str = "midpoint",
    t0: float = 0.0,
    project_initial: bool = False,
    check_gradient: bool = True,
    consistency_tol: float = CONSISTENCY_TOL,
) -> Trajectory:
    """Integrate from x0 over [t0, t0 + t_final] in ceil(t_final / dt) steps (the last one may be shorter)."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if t_final < 0:
        raise ValueError(f"t_final must be nonnegative, got {t_final}")
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    x = np.array(x0, dtype=float)
    if x.shape != (fld.n,):
        raise ValueError(f"initial state has shape {x.shape}, expected ({fld.n},)")
    if check_gradient:
        defect = fld.gradient_defect(x)
        if defect > 1e-5:
            raise ValueError(f"gradient disagrees with finite differences of the energy ({defect:.2e})")
    if project_initial:
        x = project_consistent(fld, t0, x)
    cres = fld.consistency_residual(t0, x)
    if cres > consistency_tol:
        raise InconsistentDAEError(f"inconsistent initial state (residual {cres:.3e})", x, 0, cres)

    nsteps = int(math.ceil(t_final / dt - 1e-9)) if t_final > 0 else 0
    times = [t0]
    states = [x]
    energies = [float(fld.energy(x))]
    cons = [cres]
    ports = None
    powers = None
    if fld.port_extractor is not None:
        ports = [_ports(fld, x, velocity(fld, t0, x))]
        powers = [math.nan]
    t = t0
    guess = None
    for k in range(1, nsteps + 1):
        h = min(dt, t0 + t_final - t) if k == nsteps else dt
        try:
            y, diag = step(fld, x, h, scheme, t, step_index=k, guess=guess, consistency_tol=consistency_tol)
        except DynamicsError as err:
            if err.step_index is None:
                err.step_index = k
            raise
        t = t0 + t_final if k == nsteps else t + h
        e = float(fld.energy(y))
        if ports is not None:
            u2, a2 = _ports(fld, diag.stage_state, diag.stage_velocity)
            ports.append((u2, a2))
            powers.append(abs((e - energies[-1]) / h - float(a2 @ u2)))
        times.append(t)
        states.append(y)
        energies.append(e)
        cons.append(diag.consistency_residual)
        x = y
        guess = diag.stage_velocity
    return Trajectory(
        np.asarray(times),
        np.vstack(states),
        np.asarray(energies),
        np.asarray(cons),
        ports,
        None if powers is None else np.asarray(powers),
    )


@dataclass
class PowerReport:
    residuals: np.ndarray  # per step, length len(traj) - 1
    max_residual: float
    mean_residual: float
    max_drift: float
    ports: bool

    def to_json(self) -> dict:
        return {
            "max_residual": self.max_residual,
            "mean_residual": self.mean_residual,
            "max_energy_drift": self.max_drift,
            "ports": self.ports,
        }


def energy_drift(traj: Trajectory) -> PowerReport:
    """Per-step |dE/dt| and max |E(t) - E(0)|."""
    dt = np.diff(traj.times)
    res = np.abs(np.diff(traj.energies) / dt) if dt.size else np.zeros(0)
    return _report(traj, res, False)


def power_balance(traj: Trajectory) -> PowerReport:
    """Per-step |dE/dt - <alpha2, u2>|; without a port trace this is :func:`energy_drift`."""
    if traj.port_trace is None:
        return energy_drift(traj)
    dt = np.diff(traj.times)
    supplied = np.array([float(a @ u) for u, a in traj.port_trace[1:]])
    res = np.abs(np.diff(traj.energies) / dt - supplied) if dt.size else np.zeros(0)
    return _report(traj, res, True)


def _report(traj, res, ports):
    drift = float(np.abs(traj.energies - traj.energies[0]).max(initial=0.0))
    mx = float(res.max(initial=0.0))
    mean = float(res.mean()) if res.size else 0.0
    return PowerReport(res, mx, mean, drift, ports)

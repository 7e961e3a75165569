"""Seeded property batteries with independent oracles.

Each suite draws random instances, checks one family of invariants and
returns a :class:`SuiteResult`. The oracles here deliberately avoid the
package's own subspace routines: they use ``scipy.linalg.orth`` and
``scipy.linalg.null_space`` directly so that a bug in :mod:`subspace` cannot
cancel itself out.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import dirac, iostruct, transfer
from . import subspace as ss
from .dirac import Bivector, LinearStructure, TwoForm
from .dynamics import kernel_rep_of

SCHEMA = "diracsys.check/1"
DEFAULT_TOL = 1e-9
ORACLE_RCOND = 1e-10
MAX_REPORTED_FAILURES = 5
MIN_MARGIN = 1e-3
MAX_REDRAWS = 100


# -- random generators ------------------------------------------------------
#
# Instances use small integer entries. Degenerate configurations (aligned
# ranges, rank drops) then happen exactly and exercise the rank decisions,
# while nearly degenerate ones, where rounding gets amplified by the inverse
# square of a tiny angle, cannot occur.

ENTRY_RANGE = 3


def _ints(rng, shape) -> np.ndarray:
    return rng.integers(-ENTRY_RANGE, ENTRY_RANGE + 1, shape).astype(float)


def random_skew(rng, n: int) -> np.ndarray:
    a = np.triu(_ints(rng, (n, n)), 1)
    return a - a.T


def random_subspace(rng, n: int, k: int | None = None) -> ss.Subspace:
    """Span of k integer vectors; the rank can come out below k."""
    k = int(rng.integers(0, n + 1)) if k is None else k
    raw = _ints(rng, (n, k))
    if k == 0 or not raw.any():
        return ss.zero(n)
    return ss.canonicalize(raw)


def random_map(rng, m: int, n: int) -> np.ndarray:
    """An m x n map of unit norm, forced rank deficient about a third of the time.

    It is an integer matrix scaled by its norm, so alignments stay exact.
    """
    k = min(m, n)
    if rng.random() < 1 / 3 and k > 1:
        r = int(rng.integers(1, k))
        mat = _ints(rng, (m, r)) @ _ints(rng, (r, n))
    else:
        mat = _ints(rng, (m, n))
    norm = np.linalg.norm(mat, 2)
    return mat / norm if norm else mat


def random_dirac(rng, n: int, how: str | None = None) -> LinearStructure:
    how = how or ("pair" if rng.random() < 0.5 else "bivector")
    if how == "pair":
        return dirac.from_pair(random_subspace(rng, n), TwoForm(random_skew(rng, n)))
    return dirac.from_bivector(Bivector(random_skew(rng, n)), random_subspace(rng, n))


def random_isotropic(rng, n: int) -> LinearStructure:
    d = random_dirac(rng, n)
    r = int(rng.integers(0, n + 1))
    if r == 0:
        return LinearStructure(n, ss.zero(2 * n))
    coef = _ints(rng, (n, r))
    if not coef.any():
        return LinearStructure(n, ss.zero(2 * n))
    return LinearStructure.from_basis(d.span.basis @ coef)


def random_coisotropic(rng, n: int) -> LinearStructure:
    return random_isotropic(rng, n).orthogonal()


def random_structure(rng, n: int) -> LinearStructure:
    """Any class: Dirac, isotropic, coisotropic or a generic subspace."""
    pick = int(rng.integers(0, 4))
    if pick == 0:
        return random_dirac(rng, n)
    if pick == 1:
        return random_isotropic(rng, n)
    if pick == 2:
        return random_coisotropic(rng, n)
    return LinearStructure(n, random_subspace(rng, 2 * n))


# -- oracles ----------------------------------------------------------------


def _orth(raw) -> np.ndarray:
    raw = np.asarray(raw, dtype=float)
    if raw.size == 0:
        return np.zeros((raw.shape[0], 0))
    return sla.orth(raw, rcond=ORACLE_RCOND)


def _kernel(mat) -> np.ndarray:
    mat = np.asarray(mat, dtype=float)
    if mat.shape[0] == 0:
        return np.eye(mat.shape[1])
    return sla.null_space(mat, rcond=ORACLE_RCOND)


def projector_distance(a, b) -> float:
    qa, qb = _orth(a), _orth(b)
    return float(np.linalg.norm(qa @ qa.T - qb @ qb.T))


def oracle_pairing(n: int) -> np.ndarray:
    return np.block([[np.zeros((n, n)), np.eye(n)], [np.eye(n), np.zeros((n, n))]])


def oracle_isotropy_defect(n: int, basis) -> float:
    """max |<<b_i, b_j>>| over an orthonormal basis of the span."""
    q = _orth(basis)
    if q.shape[1] == 0:
        return 0.0
    return float(np.abs(q.T @ oracle_pairing(n) @ q).max())


def oracle_coisotropy_defect(n: int, basis) -> float:
    """How far the pairing orthogonal sticks out of the span."""
    q = _orth(basis)
    perp = _kernel((oracle_pairing(n) @ q).T) if q.shape[1] else np.eye(2 * n)
    if perp.shape[1] == 0:
        return 0.0
    return float(np.linalg.norm(perp - q @ (q.T @ perp)))


def oracle_compose(da, db, di, u1, u2, v1, v2) -> np.ndarray:
    """Witness set of the composition as one stacked null space.

    Unknowns are coefficient vectors (a, b, c) of D_a, D_b, D_I. They must
    agree on the shared flows and carry opposite shared efforts:
    u2(a) = u2(c), v2(b) = v2(c), alpha2(a) = -alpha2(c), beta2(b) = -beta2(c).
    The image (u1(a), v1(b), alpha1(a), beta1(b)) is the composite.
    """
    na, nb, ni = u1 + u2, v1 + v2, u2 + v2
    ba, bb, bi = da.span.basis, db.span.basis, di.span.basis
    ka, kb, ki = ba.shape[1], bb.shape[1], bi.shape[1]
    a_u1, a_u2, a_al1, a_al2 = ba[:u1], ba[u1:na], ba[na : na + u1], ba[na + u1 :]
    b_v1, b_v2, b_be1, b_be2 = bb[:v1], bb[v1:nb], bb[nb : nb + v1], bb[nb + v1 :]
    i_u2, i_v2, i_al2, i_be2 = bi[:u2], bi[u2:ni], bi[ni : ni + u2], bi[ni + u2 :]
    z = np.zeros
    eqs = np.vstack(
        [
            np.hstack([a_u2, z((u2, kb)), -i_u2]),
            np.hstack([z((v2, ka)), b_v2, -i_v2]),
            np.hstack([a_al2, z((u2, kb)), i_al2]),
            np.hstack([z((v2, ka)), b_be2, i_be2]),
        ]
    )
    sol = _kernel(eqs)
    ca, cb = sol[:ka], sol[ka : ka + kb]
    return np.vstack([a_u1 @ ca, b_v1 @ cb, a_al1 @ ca, b_be1 @ cb])


# -- suite plumbing ---------------------------------------------------------


@dataclass
class SuiteResult:
    name: str
    trials: int
    tol: float
    max_error: float = 0.0
    failures: list = field(default_factory=list)
    failed: int = 0
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.failed == 0

    def record(self, trial: int, error: float, what: str = ""):
        error = float(error)
        if not np.isfinite(error) or error > self.max_error:
            self.max_error = error
        if not error <= self.tol:
            self.fail(trial, f"{what} error {error:.3e}".strip())

    def fail(self, trial: int, message: str):
        self.failed += 1
        if len(self.failures) < MAX_REPORTED_FAILURES:
            self.failures.append({"trial": trial, "message": message})

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "trials": self.trials,
            "tol": self.tol,
            "passed": self.passed,
            "failed": self.failed,
            "max_error": self.max_error,
            "failures": self.failures,
            "info": self.info,
        }


def _run(name, trials, tol, rng, draw, check, **counters) -> SuiteResult:
    """``draw(rng)`` returns ``(instance, margin)``; ill-posed draws are redrawn.

    The margin is the smallest relative singular value gap of the linear
    systems the instance leads to (see :func:`margin`). Exactly degenerate
    systems have a large margin and are kept.
    """
    res = SuiteResult(name, trials, tol)
    res.info["redrawn"] = 0
    res.info.update(counters)
    for t in range(trials):
        try:
            for _ in range(MAX_REDRAWS):
                inst, gap = draw(rng)
                if gap >= MIN_MARGIN:
                    break
                res.info["redrawn"] += 1
            else:
                raise RuntimeError(f"no well-posed instance in {MAX_REDRAWS} draws")
            check(inst, t, res)
        except Exception as exc:  # a crash in one trial is a failure, not an abort
            res.fail(t, f"{type(exc).__name__}: {exc}")
    return res


def margin(*mats) -> float:
    """Smallest nonzero singular value relative to max(largest, 1), minimized over ``mats``.

    Values at rounding level count as exact zeros, matching the rank
    decisions of :mod:`subspace`.
    """
    out = 1.0
    for mat in mats:
        if mat.size == 0:
            continue
        sv = np.linalg.svd(mat, compute_uv=False)
        if sv[0] == 0.0:
            continue
        nz = sv[sv > ss.get_policy().rank_rtol * max(sv[0], 1.0)]
        if nz.size:
            out = min(out, nz[-1] / max(sv[0], 1.0))
    return out


def forward_margin(phi, s: LinearStructure) -> float:
    """Conditioning of :func:`transfer.forward`: its solve and the image it spans."""
    phi = np.asarray(phi, dtype=float)
    system = np.hstack([s.effort_block, -phi.T])
    sol = ss.null_space(system, scale=1.0)
    k = s.dim
    return margin(system, np.vstack([phi @ s.flow_block @ sol[:k], sol[k:]]))


def backward_margin(phi, s: LinearStructure) -> float:
    phi = np.asarray(phi, dtype=float)
    system = np.hstack([phi, -s.flow_block])
    sol = ss.null_space(system, scale=1.0)
    n = phi.shape[1]
    return margin(system, np.vstack([sol[:n], phi.T @ s.effort_block @ sol[n:]]))


def _dist(a: LinearStructure, b: LinearStructure) -> float:
    return projector_distance(a.span.basis, b.span.basis)


def _dims(rng, count, low=1, high=6):
    return tuple(int(x) for x in rng.integers(low, high, count))


# -- suites -----------------------------------------------------------------


def suite_dirac_axioms(rng, trials=100, tol=DEFAULT_TOL) -> SuiteResult:
    def draw(rng):
        n = _dims(rng, 1, 1, 7)[0]
        how = "pair" if rng.random() < 0.5 else "bivector"
        return (n, random_dirac(rng, n, how)), 1.0

    def check(inst, t, res):
        n, d = inst
        if d.class_tag != dirac.DIRAC or d.dim != n:
            res.fail(t, f"class {d.class_tag}, dim {d.dim} on R^{n}")
        res.record(t, oracle_isotropy_defect(n, d.span.basis), "pairing")

    return _run("dirac_axioms", trials, tol, rng, draw, check)


def suite_functoriality(rng, trials=100, tol=DEFAULT_TOL) -> SuiteResult:
    fw, bw = transfer.forward, transfer.backward

    def draw(rng):
        a, b, c = _dims(rng, 3)
        phi, psi = random_map(rng, b, a), random_map(rng, c, b)
        s_a, s_c = random_structure(rng, a), random_structure(rng, c)
        gap = min(
            forward_margin(phi, s_a),
            forward_margin(psi, fw(phi, s_a)),
            forward_margin(psi @ phi, s_a),
            backward_margin(psi, s_c),
            backward_margin(phi, bw(psi, s_c)),
            backward_margin(psi @ phi, s_c),
        )
        return (phi, psi, s_a, s_c), gap

    def check(inst, t, res):
        phi, psi, s_a, s_c = inst
        res.record(t, _dist(fw(psi @ phi, s_a), fw(psi, fw(phi, s_a))), "forward")
        res.record(t, _dist(bw(psi @ phi, s_c), bw(phi, bw(psi, s_c))), "backward")
        eye = np.eye(s_a.n)
        res.record(t, _dist(fw(eye, s_a), s_a), "forward identity")
        res.record(t, _dist(bw(eye, s_a), s_a), "backward identity")

    return _run("functoriality", trials, tol, rng, draw, check)


def suite_class_preservation(rng, trials=100, tol=DEFAULT_TOL) -> SuiteResult:
    def draw(rng):
        n, m = _dims(rng, 2)
        phi = random_map(rng, m, n)
        src = (random_isotropic(rng, n), random_coisotropic(rng, n))
        tgt = (random_isotropic(rng, m), random_coisotropic(rng, m))
        gap = min(*(forward_margin(phi, s) for s in src), *(backward_margin(phi, s) for s in tgt))
        return (n, m, phi, src, tgt), gap

    def check(inst, t, res):
        n, m, phi, (iso, co), (iso_t, co_t) = inst
        res.record(t, oracle_isotropy_defect(m, transfer.forward(phi, iso).span.basis), "forward isotropic")
        res.record(t, oracle_coisotropy_defect(m, transfer.forward(phi, co).span.basis), "forward coisotropic")
        res.record(t, oracle_isotropy_defect(n, transfer.backward(phi, iso_t).span.basis), "backward isotropic")
        res.record(t, oracle_coisotropy_defect(n, transfer.backward(phi, co_t).span.basis), "backward coisotropic")

    return _run("class_preservation", trials, tol, rng, draw, check)


def random_compose_dims(rng, max_total=12):
    while True:
        u1, u2, v1, v2 = _dims(rng, 4, 0, 4)
        if u1 + v1 >= 1 and u2 + v2 >= 1 and u1 + u2 >= 1 and v1 + v2 >= 1 and u1 + u2 + v1 + v2 <= max_total:
            return u1, u2, v1, v2


def compose_margin(da, db, di, dims) -> float:
    phi, psi = transfer.composition_maps(*dims)
    prod = dirac.product(da, di, db)
    return min(backward_margin(phi.mat, prod), forward_margin(psi.mat, transfer.backward(phi, prod)))


def suite_composition_oracle(rng, trials=100, tol=DEFAULT_TOL) -> SuiteResult:
    def draw(rng):
        u1, u2, v1, v2 = dims = random_compose_dims(rng)
        da, db, di = random_dirac(rng, u1 + u2), random_dirac(rng, v1 + v2), random_dirac(rng, u2 + v2)
        return (da, db, di, dims), compose_margin(da, db, di, dims)

    def check(inst, t, res):
        da, db, di, dims = inst
        got = transfer.compose(da, db, di, *dims)
        want = oracle_compose(da, db, di, *dims)
        res.record(t, projector_distance(got.span.basis, want), "witness set")
        if not got.is_dirac:
            res.fail(t, f"composite is {got.class_tag}")

    return _run("composition_oracle", trials, tol, rng, draw, check)


def suite_isotropic_roundtrip(rng, trials=100, tol=DEFAULT_TOL) -> SuiteResult:
    def draw(rng):
        n = _dims(rng, 1, 1, 7)[0]
        s = random_dirac(rng, n) if rng.random() < 0.25 else random_isotropic(rng, n)
        return s, margin(s.flow_block)

    def check(s, t, res):
        dec = dirac.isotropic_decompose(s)
        res.record(t, _dist(dec.reconstruct(), s), "reconstruct")
        if s.is_dirac and dec.f2.rank != 0:
            res.fail(t, f"Dirac input gave dim F2 = {dec.f2.rank}")

    return _run("isotropic_roundtrip", trials, tol, rng, draw, check)


def suite_coisotropic_roundtrip(rng, trials=100, tol=DEFAULT_TOL) -> SuiteResult:
    def draw(rng):
        s = random_coisotropic(rng, _dims(rng, 1, 1, 7)[0])
        return s, margin(s.orthogonal().flow_block)

    def check(s, t, res):
        dec = dirac.coisotropic_decompose(s)
        res.record(t, _dist(dec.reconstruct(), s), "reconstruct")
        dims = dec.f.rank + dec.f2.rank + dec.f3.rank
        if dims != s.n:
            res.fail(t, f"dim F + dim F2 + dim F3 = {dims} != {s.n}")

    return _run("coisotropic_roundtrip", trials, tol, rng, draw, check)


def suite_twist(rng, trials=100, tol=DEFAULT_TOL) -> SuiteResult:
    def draw(rng):
        n, m = _dims(rng, 2)
        s, phi = random_structure(rng, n), random_map(rng, m, n)
        return (s, phi), min(forward_margin(phi, s), backward_margin(phi.T, dirac.twist(s)))

    def check(inst, t, res):
        s, phi = inst
        res.record(t, _dist(dirac.twist(dirac.twist(s)), s), "involution")
        rec = transfer.duality_transport(phi, s)
        res.record(t, projector_distance(rec.lhs.span.basis, rec.rhs.span.basis), "duality")

    return _run("twist", trials, tol, rng, draw, check)


def suite_orthogonal(rng, trials=100, tol=DEFAULT_TOL) -> SuiteResult:
    def draw(rng):
        return random_structure(rng, _dims(rng, 1, 1, 7)[0]), 1.0

    def check(s, t, res):
        n, perp = s.n, s.orthogonal()
        res.record(t, _dist(perp.orthogonal(), s), "double orthogonal")
        if s.dim + perp.dim != 2 * n:
            res.fail(t, f"dim S + dim S^perp = {s.dim + perp.dim}")
        want = _kernel((oracle_pairing(n) @ _orth(s.span.basis)).T) if s.dim else np.eye(2 * n)
        res.record(t, projector_distance(perp.span.basis, want), "orthogonal")

    return _run("orthogonal", trials, tol, rng, draw, check)


def suite_kernel_rep(rng, trials=100, tol=DEFAULT_TOL) -> SuiteResult:
    def draw(rng):
        return random_dirac(rng, _dims(rng, 1, 1, 7)[0]), 1.0

    def check(d, t, res):
        rep = kernel_rep_of(d)
        if rep.rank() != d.n:
            res.fail(t, f"rank [E|F] = {rep.rank()} != {d.n}")
        res.record(t, rep.dirac_defect(), "E F^T + F E^T")
        res.record(t, _dist(rep.to_structure(), d), "round trip")

    return _run("kernel_rep", trials, tol, rng, draw, check)


def interconnection_pair(rng, kind=iostruct.OFIO):
    """Two random open structures of ``kind`` and a Dirac D_I on their joint ports."""
    n1, n2 = (int(x) for x in rng.integers(1, 4, 2))
    m1, m2 = (int(x) for x in rng.integers(1, 3, 2))
    make = iostruct.ofio if kind == iostruct.OFIO else iostruct.obio
    shape = (lambda n, m: (n, m)) if kind == iostruct.OFIO else (lambda n, m: (m, n))
    a = make(random_dirac(rng, n1), _ints(rng, shape(n1, m1)))
    b = make(random_dirac(rng, n2), _ints(rng, shape(n2, m2)))
    return a, b, random_dirac(rng, m1 + m2)


def interconnection_distances(a, b, d_i):
    """Distance between closing the ports of A x B with D_I and composing PH-structures.

    Returns ``(dist_default, dist_naive)`` for the incoming-power sign and
    the naive sign; the latter may fail to be Dirac and is informational.
    """
    closed = iostruct.effective_structure(iostruct.interconnect(iostruct.product(a, b), d_i))
    dims = (a.u1_dim, a.u2_dim, b.u1_dim, b.u2_dim)
    out = []
    for sign, strict in ((-1, True), (1, False)):
        pa, pb = iostruct.ph_structure(a, sign), iostruct.ph_structure(b, sign)
        comp = transfer.compose(pa, pb, d_i, *dims, require_dirac=strict)
        out.append(_dist(comp, closed))
    return tuple(out)


def suite_interconnection(rng, trials=20, tol=DEFAULT_TOL, kinds=(iostruct.OFIO, iostruct.OBIO)) -> SuiteResult:
    def draw(rng):
        kind = kinds[int(rng.integers(len(kinds)))]
        a, b, d_i = interconnection_pair(rng, kind)
        dims = (a.u1_dim, a.u2_dim, b.u1_dim, b.u2_dim)
        gap = compose_margin(iostruct.ph_structure(a), iostruct.ph_structure(b), d_i, dims)
        return (kind, a, b, d_i), gap

    def check(inst, t, res):
        kind, a, b, d_i = inst
        good, naive = interconnection_distances(a, b, d_i)
        res.record(t, good, kind)
        if naive > tol:
            res.info["naive_sign_mismatches"] += 1

    return _run("interconnection", trials, tol, rng, draw, check, naive_sign_mismatches=0)


SUITES = {
    "dirac_axioms": suite_dirac_axioms,
    "functoriality": suite_functoriality,
    "class_preservation": suite_class_preservation,
    "composition_oracle": suite_composition_oracle,
    "isotropic_roundtrip": suite_isotropic_roundtrip,
    "coisotropic_roundtrip": suite_coisotropic_roundtrip,
    "twist": suite_twist,
    "orthogonal": suite_orthogonal,
    "kernel_rep": suite_kernel_rep,
    "interconnection": suite_interconnection,
}


def suite_rng(seed: int, name: str) -> np.random.Generator:
    """Independent stream per suite, so suites can run alone or in any order."""
    return np.random.default_rng([int(seed), list(SUITES).index(name)])


def run_suites(seed: int = 0, tol: float = DEFAULT_TOL, names=None, trials=None) -> dict:
    names = list(SUITES) if names is None else list(names)
    results = []
    for name in names:
        kwargs = {"tol": tol}
        if trials is not None:
            kwargs["trials"] = trials
        results.append(SUITES[name](suite_rng(seed, name), **kwargs).to_json())
    return {
        "schema": SCHEMA,
        "seed": int(seed),
        "tol": tol,
        "passed": all(r["passed"] for r in results),
        "suites": results,
    }


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"

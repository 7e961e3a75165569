"""Linear Dirac, isotropic and coisotropic structures on V + V*.

Block convention everywhere: a vector of R^{2n} is ``(v, alpha)`` with the
n flow coordinates first and the n effort coordinates last.

Matrix conventions (used consistently by every module):

* ``TwoForm.mat`` is the matrix of the flat map, ``omega_flat(u) = mat @ u``,
  so ``omega(u, w) = w @ mat @ u``.
* ``Bivector.mat`` is the matrix of the sharp map, ``sharp(a) = mat @ a``,
  so ``Lambda(b, a) = b @ mat @ a``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import block_diag

from . import subspace as ss
from .subspace import Subspace

log = logging.getLogger(__name__)

ISOTROPIC = "isotropic"
COISOTROPIC = "coisotropic"
DIRAC = "dirac"
GENERAL = "general"
CLASS_TAGS = (ISOTROPIC, COISOTROPIC, DIRAC, GENERAL)

# inclusion defects in (tol, BORDERLINE_FACTOR * tol] are logged as borderline
BORDERLINE_FACTOR = 1e3
SKEW_TOL = 1e-12


class StructureError(ValueError):
    """Input structure does not have the required class or shape."""


def _skew_checked(mat, what):
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    if mat.shape[0] != mat.shape[1]:
        raise StructureError(f"{what} must be square, got {mat.shape}")
    scale = max(1.0, float(np.abs(mat).max(initial=0.0)))
    if np.abs(mat + mat.T).max(initial=0.0) > SKEW_TOL * scale:
        raise StructureError(f"{what} is not skew-symmetric")
    out = 0.5 * (mat - mat.T)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class TwoForm:
    mat: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mat", _skew_checked(self.mat, "two-form"))

    @property
    def n(self) -> int:
        return self.mat.shape[0]

    def __call__(self, u, w) -> float:
        return float(np.asarray(w) @ self.mat @ np.asarray(u))

    def lift(self, f: Subspace) -> "TwoForm":
        """Ambient form whose restriction to ``f`` is this form, given in ``f.basis`` coordinates."""
        if f.rank != self.n:
            raise StructureError("form size does not match subspace rank")
        return TwoForm(f.basis @ self.mat @ f.basis.T)

    def restrict(self, f: Subspace) -> "TwoForm":
        """Restriction to ``f`` in ``f.basis`` coordinates."""
        return TwoForm(f.basis.T @ self.mat @ f.basis)


@dataclass(frozen=True, eq=False)
class Bivector:
    mat: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mat", _skew_checked(self.mat, "bivector"))

    @property
    def n(self) -> int:
        return self.mat.shape[0]

    def __call__(self, b, a) -> float:
        return float(np.asarray(b) @ self.mat @ np.asarray(a))


@dataclass(frozen=True, eq=False)
class LinearStructure:
    """A subspace of V + V* (dim V = n) together with its class tag."""

    n: int
    span: Subspace
    class_tag: str = field(default="")

    def __post_init__(self):
        if self.span.ambient_dim != 2 * self.n:
            raise StructureError(f"span lives in R^{self.span.ambient_dim}, expected R^{2 * self.n}")
        if not self.class_tag:
            object.__setattr__(self, "class_tag", classify(self.span))
        elif self.class_tag not in CLASS_TAGS:
            raise StructureError(f"unknown class tag {self.class_tag!r}")

    @classmethod
    def from_basis(cls, raw) -> "LinearStructure":
        sp = ss.canonicalize(raw)
        return cls(sp.ambient_dim // 2, sp)

    @property
    def dim(self) -> int:
        return self.span.rank

    @property
    def flow_block(self) -> np.ndarray:
        return self.span.basis[: self.n]

    @property
    def effort_block(self) -> np.ndarray:
        return self.span.basis[self.n :]

    @property
    def is_dirac(self) -> bool:
        return self.class_tag == DIRAC

    @property
    def is_isotropic(self) -> bool:
        return self.class_tag in (DIRAC, ISOTROPIC)

    @property
    def is_coisotropic(self) -> bool:
        return self.class_tag in (DIRAC, COISOTROPIC)

    def flow_projection(self) -> Subspace:
        return ss.canonicalize(self.flow_block, scale=1.0)

    def effort_projection(self) -> Subspace:
        return ss.canonicalize(self.effort_block, scale=1.0)

    def orthogonal(self) -> "LinearStructure":
        return LinearStructure(self.n, ss.pairing_orthogonal(self.span))

    def reclassify(self) -> str:
        return classify(self.span)

    def contains(self, v, alpha, tol=None) -> bool:
        return self.span.contains_vector(np.concatenate([v, alpha]), tol)

    def equals(self, other: "LinearStructure", tol=None) -> bool:
        return self.n == other.n and ss.equals(self.span, other.span, tol)

    def to_json(self) -> dict:
        return {"n": self.n, "span": self.span.to_json(), "class": self.class_tag}

    @classmethod
    def from_json(cls, data) -> "LinearStructure":
        if isinstance(data, str):
            data = json.loads(data)
        n = int(data["n"])
        sp = ss.Subspace.from_json(data["span"])
        if sp.ambient_dim != 2 * n:
            raise StructureError(f"span ambient dimension {sp.ambient_dim} does not match n={n}")
        out = cls(n, sp)
        declared = data.get("class")
        if declared is not None and declared != out.class_tag:
            log.warning("declared class %r differs from computed class %r", declared, out.class_tag)
        return out

    def __repr__(self):
        return f"LinearStructure(n={self.n}, dim={self.dim}, class={self.class_tag})"


def classify(s: Subspace) -> str:
    """Class tag of ``s`` from the two inclusion tests against its pairing orthogonal."""
    if s.ambient_dim % 2:
        raise ValueError(f"odd ambient dimension {s.ambient_dim}")
    tol = ss.get_policy().equal_tol
    perp = ss.pairing_orthogonal(s)
    iso_defect = ss.inclusion_defect(s, perp)
    coiso_defect = ss.inclusion_defect(perp, s)
    for name, d in (("isotropy", iso_defect), ("coisotropy", coiso_defect)):
        if tol < d <= BORDERLINE_FACTOR * tol:
            log.warning("borderline %s defect %.3e (tol %.1e); treated as failing", name, d, tol)
    iso = iso_defect <= tol
    coiso = coiso_defect <= tol
    if iso and coiso:
        return DIRAC
    if iso:
        return ISOTROPIC
    if coiso:
        return COISOTROPIC
    return GENERAL


def pairing_defect(s: LinearStructure) -> float:
    """max |<<x, y>>| over pairs of orthonormal spanning vectors."""
    b = s.span.basis
    if b.shape[1] == 0:
        return 0.0
    return float(np.abs(b.T @ ss.pairing_matrix(s.n) @ b).max())


def from_pair(f: Subspace, omega: TwoForm) -> LinearStructure:
    """The Dirac structure with flow projection ``f`` and induced form ``omega|f``.

    ``omega`` is an ambient form on R^n; see :meth:`TwoForm.lift` for forms
    given on ``f`` itself.
    """
    if f.ambient_dim != omega.n:
        raise StructureError(f"dimension mismatch: subspace in R^{f.ambient_dim}, form on R^{omega.n}")
    n = f.ambient_dim
    b = f.basis
    c = ss.annihilator(f).basis
    top = np.hstack([b, np.zeros((n, c.shape[1]))])
    bottom = np.hstack([omega.mat @ b, c])
    return LinearStructure(n, ss.canonicalize(np.vstack([top, bottom])), DIRAC)


def from_form(omega: TwoForm) -> LinearStructure:
    """Graph of the flat map of ``omega``."""
    return from_pair(ss.full(omega.n), omega)


def from_bivector(lam: Bivector, codistribution: Subspace | None = None) -> LinearStructure:
    """{(v, a): a in G, b(v) = Lambda(b, a) for all b in G}, G the codistribution (default: all of V*)."""
    n = lam.n
    g = ss.full(n) if codistribution is None else codistribution
    if g.ambient_dim != n:
        raise StructureError(f"dimension mismatch: codistribution in R^{g.ambient_dim}, bivector on R^{n}")
    gb = g.basis
    w = ss.annihilator(g).basis  # vectors killed by every covector of G
    top = np.hstack([lam.mat @ gb, w])
    bottom = np.hstack([gb, np.zeros((n, w.shape[1]))])
    return LinearStructure(n, ss.canonicalize(np.vstack([top, bottom])), DIRAC)


def trivial() -> LinearStructure:
    """The (Dirac) structure on the zero space, the port structure of a system without ports."""
    return LinearStructure(0, Subspace(0, np.zeros((0, 0))), DIRAC)


def flows_only(n: int) -> LinearStructure:
    """V + {0}."""
    return from_form(TwoForm(np.zeros((n, n))))


def efforts_only(n: int) -> LinearStructure:
    """{0} + V*."""
    return from_bivector(Bivector(np.zeros((n, n))))


def full_space(n: int) -> LinearStructure:
    """V + V*, the maximal coisotropic structure."""
    return LinearStructure(n, ss.full(2 * n), COISOTROPIC if n else DIRAC)


def product(*structures: LinearStructure) -> LinearStructure:
    """Product structure on V_1 x ... x V_N, flows (v_1..v_N) then efforts (a_1..a_N)."""
    if not structures:
        raise ValueError("product of no structures")
    flows = block_diag(*[s.flow_block for s in structures])
    efforts = block_diag(*[s.effort_block for s in structures])
    n = int(np.sum([s.n for s in structures]))
    sp = ss.canonicalize(np.vstack([flows, efforts])) if flows.size else ss.zero(2 * n)
    return LinearStructure(n, sp)


def twist(d: LinearStructure) -> LinearStructure:
    """{(a, v) : (v, a) in D}, a structure on V*."""
    b = d.span.basis
    swapped = Subspace(2 * d.n, np.vstack([b[d.n :], b[: d.n]]))
    return LinearStructure(d.n, swapped, d.class_tag)


def _induced_form(s: LinearStructure):
    """Flow projection F and the induced form on F, plus the well-definedness defect.

    For each orthonormal basis vector q_i of F a covector a_i with (q_i, a_i)
    in S is found; the form has ``mat[j, i] = a_i(q_j)``.
    """
    n = s.n
    fb, eb = s.flow_block, s.effort_block
    if s.dim == 0:
        return ss.zero(n), np.zeros((0, 0)), np.zeros((n, 0)), 0.0
    u, sv, vh = np.linalg.svd(fb, full_matrices=True)
    r = int(np.sum(sv > ss.get_policy().rank_rtol * max(sv[0], 1.0))) if sv.size else 0
    f = Subspace(n, u[:, :r])
    # (f.basis[:, i], covecs[:, i]) lies in S
    covecs = eb @ (vh[:r].T / sv[:r])
    mat = f.basis.T @ covecs
    # covectors attached to the zero flow must vanish on F
    kernel = vh[r:].T
    ambiguity = f.basis.T @ eb @ kernel
    defect = max(float(np.abs(ambiguity).max(initial=0.0)), float(np.abs(mat + mat.T).max(initial=0.0)))
    # already checked against the defect; drop the rounding asymmetry
    return f, 0.5 * (mat - mat.T), covecs, defect


def range_and_form(d: LinearStructure):
    """(F_D, omega_D) with omega_D in coordinates of the orthonormal basis of F_D."""
    if not d.is_isotropic:
        raise StructureError(f"induced form needs an isotropic structure, got {d.class_tag}")
    f, mat, _, defect = _induced_form(d)
    if defect > ss.get_policy().equal_tol:
        raise StructureError(f"induced form is not well defined (defect {defect:.3e})")
    return f, TwoForm(mat)


def from_restricted(f: Subspace, omega_f: TwoForm) -> LinearStructure:
    """Same as :func:`from_pair` but with the form given on ``f`` in ``f.basis`` coordinates."""
    return from_pair(f, omega_f.lift(f))


@dataclass(frozen=True, eq=False)
class IsotropicDecomposition:
    """Parts of an isotropic S with flow projection F:

        S = {(u, omega_F(u) + shear(u) + k) : u in F, k in ann_{F1}(F2)}

    with V = F + F1 (F1 the orthogonal complement), F2 inside F1, and the
    shear u -> F2* a linear map (``shear_mat`` acts on F coordinates and
    returns F2 coordinates). The shear vanishes for Dirac S and for every S
    containing the graph part exactly.
    """

    n: int
    f: Subspace
    omega_f: TwoForm
    f1: Subspace
    f2: Subspace
    shear_mat: np.ndarray

    def dirac_part(self) -> LinearStructure:
        """D_{V, omega_F}: the Dirac structure with F2 = {0} and no shear."""
        return from_restricted(self.f, self.omega_f)

    def reconstruct(self) -> LinearStructure:
        n = self.n
        q = self.f.basis
        graph = np.vstack([q, q @ self.omega_f.mat + self.f2.basis @ self.shear_mat])
        k = _relative_annihilator(self.f1, self.f2)
        kernel = np.vstack([np.zeros((n, k.shape[1])), k])
        raw = np.hstack([graph, kernel])
        sp = ss.canonicalize(raw) if raw.size else ss.zero(2 * n)
        return LinearStructure(n, sp)


def _relative_annihilator(f1: Subspace, f2: Subspace) -> np.ndarray:
    """Covectors on F1 vanishing on F2, extended by zero on F1's complement.

    With orthogonal complements and the Euclidean identification this is the
    orthogonal complement of F2 inside F1.
    """
    if f1.rank == 0:
        return np.zeros((f1.ambient_dim, 0))
    inside = ss.null_space(f2.basis.T @ f1.basis) if f2.rank else np.eye(f1.rank)
    return f1.basis @ inside


def isotropic_decompose(s: LinearStructure) -> IsotropicDecomposition:
    if not s.is_isotropic:
        raise StructureError(f"isotropic decomposition needs an isotropic structure, got {s.class_tag}")
    n = s.n
    f, mat, covecs, defect = _induced_form(s)
    if defect > ss.get_policy().equal_tol:
        raise StructureError(f"induced form is not well defined (defect {defect:.3e})")
    f1 = ss.orthogonal_complement(f)
    pure_efforts = Subspace(2 * n, np.vstack([np.zeros((n, n)), np.eye(n)]))
    k = ss.intersect(s.span, pure_efforts)
    k_eff = ss.canonicalize(k.basis[n:], scale=1.0) if k.rank else ss.zero(n)
    # F2 = vectors of F1 killed by every pure-effort covector of S
    f2 = ss.intersect(f1, ss.annihilator(k_eff))
    shear = f2.basis.T @ covecs if f2.rank else np.zeros((0, f.rank))
    return IsotropicDecomposition(n, f, TwoForm(mat), f1, f2, shear)


@dataclass(frozen=True, eq=False)
class CoisotropicDecomposition:
    """Coisotropic S written as the pairing orthogonal of an isotropic structure.

    ``f3`` is the orthogonal complement of ``f2`` inside ``f1``; with zero
    shear, S = D_{omega_F} + ({0} + F3*) + (F2 + F2*).
    """

    isotropic: IsotropicDecomposition
    f3: Subspace

    @property
    def f(self):
        return self.isotropic.f

    @property
    def omega_f(self):
        return self.isotropic.omega_f

    @property
    def f1(self):
        return self.isotropic.f1

    @property
    def f2(self):
        return self.isotropic.f2

    @property
    def shear_mat(self):
        return self.isotropic.shear_mat

    def reconstruct(self) -> LinearStructure:
        return self.isotropic.reconstruct().orthogonal()


def coisotropic_decompose(s: LinearStructure) -> CoisotropicDecomposition:
    if not s.is_coisotropic:
        raise StructureError(f"coisotropic decomposition needs a coisotropic structure, got {s.class_tag}")
    iso = isotropic_decompose(s.orthogonal())
    f3 = Subspace(s.n, _relative_annihilator(iso.f1, iso.f2))
    return CoisotropicDecomposition(iso, f3)

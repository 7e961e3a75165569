"""Forward and backward transfer of structures along linear maps, and composition."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import subspace as ss
from .dirac import LinearStructure, StructureError, product, twist


@dataclass(frozen=True, eq=False)
class LinearMapSpec:
    """phi: V -> W stored as a (dim W x dim V) matrix; the dual map is ``mat.T``."""

    mat: np.ndarray

    def __post_init__(self):
        mat = np.array(self.mat, dtype=float, ndmin=2)
        if mat.ndim != 2:
            raise ValueError(f"linear map must be a matrix, got shape {mat.shape}")
        if not np.all(np.isfinite(mat)):
            raise ValueError("linear map has non-finite entries")
        mat.setflags(write=False)
        object.__setattr__(self, "mat", mat)

    @classmethod
    def identity(cls, n: int) -> "LinearMapSpec":
        return cls(np.eye(n))

    @property
    def source_dim(self) -> int:
        return self.mat.shape[1]

    @property
    def target_dim(self) -> int:
        return self.mat.shape[0]

    @property
    def dual(self) -> "LinearMapSpec":
        return LinearMapSpec(self.mat.T)

    def __matmul__(self, other: "LinearMapSpec") -> "LinearMapSpec":
        """``self @ other`` is the composite map (self after other)."""
        if self.source_dim != other.target_dim:
            raise ValueError(f"cannot compose maps {self.mat.shape} and {other.mat.shape}")
        return LinearMapSpec(self.mat @ other.mat)

    def to_json(self) -> list:
        return self.mat.tolist()


def _as_map(phi) -> LinearMapSpec:
    return phi if isinstance(phi, LinearMapSpec) else LinearMapSpec(phi)


def _structure(n: int, raw: np.ndarray) -> LinearStructure:
    sp = ss.canonicalize(raw, scale=1.0) if raw.shape[1] else ss.zero(2 * n)
    return LinearStructure(n, sp)


def forward(phi, s: LinearStructure) -> LinearStructure:
    """{(phi v, w*) : (v, phi* w*) in S}, a structure on the target of ``phi``."""
    phi = _as_map(phi)
    if phi.source_dim != s.n:
        raise ValueError(f"dimension mismatch: map source {phi.source_dim}, structure on R^{s.n}")
    m = phi.target_dim
    bv, ba = s.flow_block, s.effort_block
    k = bv.shape[1]
    # unknowns (c, w*) with ba c = phi^T w*
    sol = ss.null_space(np.hstack([ba, -phi.mat.T]), scale=1.0)
    c, w = sol[:k], sol[k:]
    return _structure(m, np.vstack([phi.mat @ bv @ c, w]))


def backward(phi, s: LinearStructure) -> LinearStructure:
    """{(v, phi* w*) : (phi v, w*) in S}, a structure on the source of ``phi``."""
    phi = _as_map(phi)
    if phi.target_dim != s.n:
        raise ValueError(f"dimension mismatch: map target {phi.target_dim}, structure on R^{s.n}")
    n = phi.source_dim
    bw, ba = s.flow_block, s.effort_block
    # unknowns (v, c) with phi v = bw c
    sol = ss.null_space(np.hstack([phi.mat, -bw]), scale=1.0)
    v, c = sol[:n], sol[n:]
    return _structure(n, np.vstack([v, phi.mat.T @ ba @ c]))


def composition_maps(u1: int, u2: int, v1: int, v2: int):
    """The pair (phi, psi) realizing composition.

    phi: (u1, u2, v1, v2) -> (u1, u2 | u2, v2 | v1, v2), into the product of
    D_a, D_I and D_b in that order; psi: (u1, u2, v1, v2) -> (u1, v1).
    """
    total = u1 + u2 + v1 + v2
    eye = np.eye(total)
    iu1 = eye[:u1]
    iu2 = eye[u1 : u1 + u2]
    iv1 = eye[u1 + u2 : u1 + u2 + v1]
    iv2 = eye[u1 + u2 + v1 :]
    phi = np.vstack([iu1, iu2, iu2, iv2, iv1, iv2])
    psi = np.vstack([iu1, iv1])
    return LinearMapSpec(phi.reshape(-1, total)), LinearMapSpec(psi.reshape(-1, total))


def compose(
    da: LinearStructure,
    db: LinearStructure,
    di: LinearStructure,
    u1: int,
    u2: int,
    v1: int,
    v2: int,
    require_dirac: bool = True,
) -> LinearStructure:
    """Compose D_a on U1+U2 with D_b on V1+V2 through D_I on U2+V2; result on U1+V1.

    Backward along ``phi`` of D_a x D_I x D_b, then forward along ``psi``
    (see :func:`composition_maps`). Elementwise this is the set of
    (u1, v1, a1, b1) for which some (u2, v2, -a2, -b2) in D_I has
    (u1, u2, a1, a2) in D_a and (v1, v2, b1, b2) in D_b.
    """
    for name, s, want in (("D_a", da, u1 + u2), ("D_b", db, v1 + v2), ("D_I", di, u2 + v2)):
        if s.n != want:
            raise ValueError(f"{name} lives on R^{s.n}, expected R^{want}")
        if require_dirac and not s.is_dirac:
            raise StructureError(f"{name} is not Dirac (class {s.class_tag})")
    phi, psi = composition_maps(u1, u2, v1, v2)
    return forward(psi, backward(phi, product(da, di, db)))


def tensor_product(d1: LinearStructure, d2: LinearStructure) -> LinearStructure:
    """{(u, a) : (u, a - a2) in D1, (u, a2) in D2 for some a2}."""
    if d1.n != d2.n:
        raise ValueError(f"dimension mismatch: {d1.n} vs {d2.n}")
    k1 = d1.dim
    sol = ss.null_space(np.hstack([d1.flow_block, -d2.flow_block]), scale=1.0)
    c1, c2 = sol[:k1], sol[k1:]
    flows = d1.flow_block @ c1
    efforts = d1.effort_block @ c1 + d2.effort_block @ c2
    return _structure(d1.n, np.vstack([flows, efforts]))


def diagonal(n: int) -> LinearMapSpec:
    eye = np.eye(n)
    return LinearMapSpec(np.vstack([eye, eye]))


@dataclass(frozen=True)
class DualityRecord:
    lhs: LinearStructure
    rhs: LinearStructure
    distance: float
    equal: bool


def duality_transport(phi, d: LinearStructure, tol=None) -> DualityRecord:
    """Compare twist(forward(phi, D)) with backward(phi*, twist(D))."""
    phi = _as_map(phi)
    lhs = twist(forward(phi, d))
    rhs = backward(phi.dual, twist(d))
    dist = ss.distance(lhs.span, rhs.span)
    tol = ss.get_policy().equal_tol if tol is None else tol
    return DualityRecord(lhs, rhs, dist, dist <= tol)

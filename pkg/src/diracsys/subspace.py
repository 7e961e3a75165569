"""Subspace arithmetic over R^k with orthonormal-basis canonical form."""

from __future__ import annotations

import contextlib
import json
from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class NumericPolicy:
    rank_rtol: float = 1e-10
    equal_tol: float = 1e-9


_policy = NumericPolicy()


def get_policy() -> NumericPolicy:
    return _policy


@contextlib.contextmanager
def numeric_policy(**overrides):
    """Temporarily override the global tolerances, e.g. ``numeric_policy(equal_tol=1e-7)``."""
    global _policy
    saved = _policy
    _policy = replace(saved, **overrides)
    try:
        yield _policy
    finally:
        _policy = saved


def null_space(mat, rtol=None, scale=0.0) -> np.ndarray:
    """Orthonormal basis (as columns) of the null space of ``mat``.

    Singular values below ``rtol * max(s_max, scale)`` count as zero; pass
    ``scale=1`` when the entries are known to be of unit size, so that pure
    rounding noise is not mistaken for rank.
    """
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    rows, cols = mat.shape
    if rows == 0 or cols == 0:
        return np.eye(cols)
    rtol = get_policy().rank_rtol if rtol is None else rtol
    _, s, vh = np.linalg.svd(mat, full_matrices=True)
    if s.size == 0 or s[0] == 0.0:
        return np.eye(cols)
    rank = int(np.sum(s > rtol * max(s[0], scale)))
    return vh[rank:].T.copy()


def _column_space(raw, rtol=None, scale=0.0) -> np.ndarray:
    raw = np.asarray(raw, dtype=float)
    k, m = raw.shape
    if m == 0:
        return np.zeros((k, 0))
    rtol = get_policy().rank_rtol if rtol is None else rtol
    u, s, _ = np.linalg.svd(raw, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((k, 0))
    rank = int(np.sum(s > rtol * max(s[0], scale)))
    return u[:, :rank].copy()


@dataclass(frozen=True, eq=False)
class Subspace:
    """A linear subspace of R^ambient_dim stored as an orthonormal column basis."""

    ambient_dim: int
    basis: np.ndarray

    def __post_init__(self):
        basis = np.array(self.basis, dtype=float)
        basis = np.zeros((0, 0)) if self.ambient_dim == 0 else basis.reshape(self.ambient_dim, -1)
        basis.setflags(write=False)
        object.__setattr__(self, "basis", basis)

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    dim = rank

    @property
    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def contains_vector(self, vec, tol=None) -> bool:
        tol = get_policy().equal_tol if tol is None else tol
        vec = np.asarray(vec, dtype=float)
        return bool(np.linalg.norm(vec - self.projector @ vec) <= tol * max(1.0, np.linalg.norm(vec)))

    def to_json(self) -> dict:
        # list of columns
        return {"ambient_dim": self.ambient_dim, "basis": self.basis.T.tolist()}

    @classmethod
    def from_json(cls, data) -> "Subspace":
        if isinstance(data, str):
            data = json.loads(data)
        n = int(data["ambient_dim"])
        if n < 0:
            raise ValueError(f"negative ambient dimension {n}")
        if n == 0:
            return cls(0, np.zeros((0, 0)))
        cols = np.asarray(data["basis"], dtype=float).reshape(-1, n)
        return canonicalize(cols.T) if cols.size else zero(n)

    def __repr__(self):
        return f"Subspace(ambient_dim={self.ambient_dim}, rank={self.rank})"


def canonicalize(raw, scale=0.0) -> Subspace:
    """Column space of ``raw`` (k x m) as a :class:`Subspace`.

    ``scale`` floors the reference singular value, see :func:`null_space`.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.ndim == 1:
        raw = raw[:, None]
    k = raw.shape[0]
    if k < 1:
        raise ValueError("ambient dimension must be at least 1")
    return Subspace(k, _column_space(raw, scale=scale))


def zero(n: int) -> Subspace:
    return Subspace(n, np.zeros((n, 0)))


def full(n: int) -> Subspace:
    return Subspace(n, np.eye(n))


def span(*vectors) -> Subspace:
    return canonicalize(np.column_stack([np.asarray(v, dtype=float) for v in vectors]))


def _check_same(a: Subspace, b: Subspace):
    if a.ambient_dim != b.ambient_dim:
        raise ValueError(f"dimension mismatch: {a.ambient_dim} vs {b.ambient_dim}")


def sum(a: Subspace, b: Subspace) -> Subspace:  # noqa: A001 - mirrors the set operation
    _check_same(a, b)
    return canonicalize(np.hstack([a.basis, b.basis]))


def intersect(a: Subspace, b: Subspace) -> Subspace:
    _check_same(a, b)
    eye = np.eye(a.ambient_dim)
    stacked = np.vstack([eye - a.projector, eye - b.projector])
    # projector entries are O(1); a tiny difference is rounding, not rank
    return Subspace(a.ambient_dim, null_space(stacked, scale=1.0))


def orthogonal_complement(a: Subspace) -> Subspace:
    return Subspace(a.ambient_dim, null_space(a.basis.T))


def annihilator(f: Subspace) -> Subspace:
    """Covectors vanishing on ``f``, in standard dual coordinates."""
    return orthogonal_complement(f)


def pairing_matrix(n: int) -> np.ndarray:
    eye = np.eye(n)
    z = np.zeros((n, n))
    return np.block([[z, eye], [eye, z]])


def pairing_orthogonal(s: Subspace) -> Subspace:
    """Orthogonal of ``s`` under <<(v1,a1),(v2,a2)>> = a1(v2) + a2(v1); flows first."""
    if s.ambient_dim % 2:
        raise ValueError(f"odd ambient dimension {s.ambient_dim}")
    n = s.ambient_dim // 2
    return Subspace(s.ambient_dim, null_space(s.basis.T @ pairing_matrix(n)))


def distance(a: Subspace, b: Subspace) -> float:
    """Frobenius distance between orthogonal projectors."""
    _check_same(a, b)
    return float(np.linalg.norm(a.projector - b.projector))


def equals(a: Subspace, b: Subspace, tol=None) -> bool:
    tol = get_policy().equal_tol if tol is None else tol
    return distance(a, b) <= tol


def inclusion_defect(small: Subspace, big: Subspace) -> float:
    """Largest component of ``small`` sticking out of ``big`` (0 iff small is inside big)."""
    _check_same(small, big)
    if small.rank == 0:
        return 0.0
    out = small.basis - big.projector @ small.basis
    return float(np.linalg.norm(out, 2))


def contains(big: Subspace, small: Subspace, tol=None) -> bool:
    tol = get_policy().equal_tol if tol is None else tol
    return inclusion_defect(small, big) <= tol

"""Forward and backward input-output structures (FIO, OFIO, BIO, OBIO).

A forward structure couples a Dirac structure on U1 with a port structure on
U2 through ``g: U2 -> U1``; its effective structure is the forward image of
D_U1 x D_U2 along ``(u1, u2) -> u1 + g u2``. A backward structure uses
``p: U1 -> U2`` and pulls D_U1 x D_U2 back along ``u1 -> (u1, p u1)``.
Open kinds carry the full space U2 + U2* as port structure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag

from . import dirac
from . import subspace as ss
from .dirac import LinearStructure, StructureError
from .transfer import LinearMapSpec, backward, forward

FIO, OFIO, BIO, OBIO = "FIO", "OFIO", "BIO", "OBIO"
KINDS = (FIO, OFIO, BIO, OBIO)
FORWARD_KINDS = (FIO, OFIO)
OPEN_KINDS = (OFIO, OBIO)

WITNESS_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class IOStructure:
    kind: str
    u1_dim: int
    u2_dim: int
    d_u1: LinearStructure
    port_struct: LinearStructure
    coupling: LinearMapSpec

    def __post_init__(self):
        if self.kind not in KINDS:
            raise StructureError(f"unknown kind {self.kind!r}")
        if not isinstance(self.coupling, LinearMapSpec):
            object.__setattr__(self, "coupling", LinearMapSpec(self.coupling))
        if self.d_u1.n != self.u1_dim or self.port_struct.n != self.u2_dim:
            raise StructureError("structure dimensions do not match u1_dim/u2_dim")
        if not self.d_u1.is_dirac:
            raise StructureError(f"D_U1 must be Dirac, got {self.d_u1.class_tag}")
        if self.is_open:
            if self.port_struct.dim != 2 * self.u2_dim:
                raise StructureError("open kinds need the full port space U2 + U2*")
        elif not self.port_struct.is_dirac:
            raise StructureError(f"closed kinds need a Dirac port structure, got {self.port_struct.class_tag}")
        want = (self.u1_dim, self.u2_dim) if self.is_forward else (self.u2_dim, self.u1_dim)
        if self.coupling.mat.shape != want:
            raise StructureError(f"coupling has shape {self.coupling.mat.shape}, expected {want}")

    @property
    def is_forward(self) -> bool:
        return self.kind in FORWARD_KINDS

    @property
    def is_open(self) -> bool:
        return self.kind in OPEN_KINDS

    def assembly_map(self) -> LinearMapSpec:
        """Phi_A(u1, u2) = u1 + g u2 for forward kinds, Psi_A(u1) = (u1, p u1) for backward kinds."""
        c = self.coupling.mat
        if self.is_forward:
            return LinearMapSpec(np.hstack([np.eye(self.u1_dim), c]))
        return LinearMapSpec(np.vstack([np.eye(self.u1_dim), c]))

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "u1_dim": self.u1_dim,
            "u2_dim": self.u2_dim,
            "d_u1": self.d_u1.to_json(),
            "port_struct": self.port_struct.to_json(),
            "coupling": self.coupling.mat.tolist(),
        }

    @classmethod
    def from_json(cls, data) -> "IOStructure":
        if isinstance(data, str):
            data = json.loads(data)
        u1, u2 = int(data["u1_dim"]), int(data["u2_dim"])
        shape = (u1, u2) if data["kind"] in FORWARD_KINDS else (u2, u1)
        coupling = np.asarray(data["coupling"], dtype=float).reshape(shape)
        return cls(
            data["kind"],
            u1,
            u2,
            LinearStructure.from_json(data["d_u1"]),
            LinearStructure.from_json(data["port_struct"]),
            LinearMapSpec(coupling),
        )


def fio(d_u1: LinearStructure, d_u2: LinearStructure, g) -> IOStructure:
    return IOStructure(FIO, d_u1.n, d_u2.n, d_u1, d_u2, LinearMapSpec(np.reshape(g, (d_u1.n, d_u2.n))))


def ofio(d_u1: LinearStructure, g) -> IOStructure:
    g = np.atleast_2d(np.asarray(g, dtype=float)).reshape(d_u1.n, -1)
    return IOStructure(OFIO, d_u1.n, g.shape[1], d_u1, dirac.full_space(g.shape[1]), LinearMapSpec(g))


def bio(d_u1: LinearStructure, d_u2: LinearStructure, p) -> IOStructure:
    return IOStructure(BIO, d_u1.n, d_u2.n, d_u1, d_u2, LinearMapSpec(np.reshape(p, (d_u2.n, d_u1.n))))


def obio(d_u1: LinearStructure, p) -> IOStructure:
    p = np.atleast_2d(np.asarray(p, dtype=float)).reshape(-1, d_u1.n)
    return IOStructure(OBIO, d_u1.n, p.shape[0], d_u1, dirac.full_space(p.shape[0]), LinearMapSpec(p))


def effective_structure(a: IOStructure) -> LinearStructure:
    """D_A (closed kinds, Dirac) or Sigma_A (open kinds, coisotropic) on U1."""
    prod = dirac.product(a.d_u1, a.port_struct)
    if a.is_forward:
        return forward(a.assembly_map(), prod)
    return backward(a.assembly_map(), prod)


@dataclass(frozen=True)
class Witness:
    u2: np.ndarray
    alpha2: np.ndarray
    residuals: tuple  # one per defining condition


def _residual(s: LinearStructure, v, alpha) -> float:
    x = np.concatenate([v, alpha])
    return float(np.linalg.norm(x - s.span.projector @ x))


def membership_witness(a: IOStructure, u1, alpha1, tol: float = WITNESS_TOL) -> Witness | None:
    """Port variables (u2, alpha2) certifying (u1, alpha1) in the effective structure, or None.

    Forward kinds: (u1 - g u2, alpha1) in D_U1, (u2, alpha2) in D_U2, alpha2 = g* alpha1.
    Backward kinds: u2 = p u1, (u1, alpha1 - p* alpha2) in D_U1, (u2, alpha2) in D_U2.
    """
    u1 = np.asarray(u1, dtype=float)
    alpha1 = np.asarray(alpha1, dtype=float)
    c = a.coupling.mat
    b1v, b1a = a.d_u1.flow_block, a.d_u1.effort_block
    b2v, b2a = a.port_struct.flow_block, a.port_struct.effort_block
    k1, k2 = b1v.shape[1], b2v.shape[1]
    n1, n2 = a.u1_dim, a.u2_dim
    if a.is_forward:
        alpha2 = c.T @ alpha1
        lhs = np.block(
            [
                [b1v, c @ b2v],
                [b1a, np.zeros((n1, k2))],
                [np.zeros((n2, k1)), b2a],
            ]
        )
        rhs = np.concatenate([u1, alpha1, alpha2])
    else:
        lhs = np.block(
            [
                [b1v, np.zeros((n1, k2))],
                [b1a, c.T @ b2a],
                [np.zeros((n2, k1)), b2v],
            ]
        )
        rhs = np.concatenate([u1, alpha1, c @ u1])
    coef, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    d = coef[k1:]
    u2 = b2v @ d
    if not a.is_forward:
        alpha2 = b2a @ d
    if a.is_forward:
        res = (
            _residual(a.d_u1, u1 - c @ u2, alpha1),
            _residual(a.port_struct, u2, alpha2),
            float(np.linalg.norm(alpha2 - c.T @ alpha1)),
        )
    else:
        res = (
            float(np.linalg.norm(u2 - c @ u1)),
            _residual(a.d_u1, u1, alpha1 - c.T @ alpha2),
            _residual(a.port_struct, u2, alpha2),
        )
    scale = max(1.0, float(np.linalg.norm(rhs)))
    if max(res) > tol * scale:
        return None
    return Witness(u2, alpha2, res)


def product(*items: IOStructure) -> IOStructure:
    """Product of open structures of one kind, in list order."""
    if not items:
        raise ValueError("product of no structures")
    kinds = {a.kind for a in items}
    if len(kinds) != 1 or not items[0].is_open:
        raise StructureError(f"product needs open structures of a single kind, got {sorted(kinds)}")
    kind = items[0].kind
    d_u1 = dirac.product(*[a.d_u1 for a in items])
    u2 = int(np.sum([a.u2_dim for a in items]))
    coupling = block_diag(*[a.coupling.mat for a in items])
    coupling = coupling.reshape((d_u1.n, u2) if kind == OFIO else (u2, d_u1.n))
    return IOStructure(kind, d_u1.n, u2, d_u1, dirac.full_space(u2), LinearMapSpec(coupling))


def interconnect(a: IOStructure, d_ports: LinearStructure) -> IOStructure:
    """Close the ports of an open structure with a Dirac structure on U2."""
    if not a.is_open:
        raise StructureError(f"interconnect needs an open structure, got {a.kind}")
    if d_ports.n != a.u2_dim:
        raise ValueError(f"port structure on R^{d_ports.n}, expected R^{a.u2_dim}")
    if not d_ports.is_dirac:
        raise StructureError(f"port structure must be Dirac, got {d_ports.class_tag}")
    kind = FIO if a.kind == OFIO else BIO
    return IOStructure(kind, a.u1_dim, a.u2_dim, a.d_u1, d_ports, a.coupling)


def ph_structure(a: IOStructure, sign: int = -1) -> LinearStructure:
    """Port-Hamiltonian structure on U1 x U2 of an open structure.

    Forward kinds give {(u1, u2, a1, a2) : (u1 - g u2, a1) in D_U1, a2 = sign * g* a1},
    backward kinds {(u1, u2, a1, a2) : u2 = p u1, (u1, a1 - sign * p* a2) in D_U1}.
    With the default sign the port effort enters as incoming power, which is
    the convention under which composing through D_I matches closing the
    ports with D_I. Only sign = -1 yields a Dirac structure in general.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    n1, n2 = a.u1_dim, a.u2_dim
    c = a.coupling.mat
    bv, ba = a.d_u1.flow_block, a.d_u1.effort_block
    k = bv.shape[1]
    if a.is_forward:
        # parameters (coefficients of D_U1, u2)
        flows = np.block([[bv, c], [np.zeros((n2, k)), np.eye(n2)]])
        efforts = np.block([[ba, np.zeros((n1, n2))], [sign * c.T @ ba, np.zeros((n2, n2))]])
    else:
        # parameters (coefficients of D_U1, a2)
        flows = np.block([[bv, np.zeros((n1, n2))], [c @ bv, np.zeros((n2, n2))]])
        efforts = np.block([[ba, sign * c.T], [np.zeros((n2, k)), np.eye(n2)]])
    return LinearStructure(n1 + n2, ss.canonicalize(np.vstack([flows, efforts])))

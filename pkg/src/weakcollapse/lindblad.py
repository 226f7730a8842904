"""Lindblad master equation and its algebraic relation to the collapse flow."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike

from .collapse import collapse_rhs, unitary_rhs
from .errors import DimensionError
from .integrate import IntegratorParams, TrajectoryRecord, integrate_fixed_step
from .quantum import DEFAULT_TOL, ProjectorSet, Tolerances, check_projector, purity


def dissipator(l: ArrayLike, rho: ArrayLike) -> np.ndarray:
    """L rho L^dag - (1/2) rho L^dag L - (1/2) L^dag L rho."""
    l = np.asarray(l, dtype=complex)
    rho = np.asarray(rho, dtype=complex)
    if l.shape[-1] != rho.shape[-1]:
        raise DimensionError(f"dimension mismatch: {l.shape[-1]} vs {rho.shape[-1]}")
    ld = np.swapaxes(l.conj(), -1, -2)
    ldl = ld @ l
    return l @ rho @ ld - 0.5 * (rho @ ldl + ldl @ rho)


def _stack(ls: Optional[Sequence[ArrayLike]], dim: int) -> np.ndarray:
    if ls is None or len(ls) == 0:
        return np.zeros((0, dim, dim), dtype=complex)
    ls = np.asarray(ls, dtype=complex)
    if ls.ndim != 3 or ls.shape[1:] != (dim, dim):
        raise DimensionError(f"Lindblad operators must have shape (m, {dim}, {dim}), got {ls.shape}")
    return ls


def master_rhs(
    rho: ArrayLike, h: Optional[ArrayLike] = None, ls: Optional[Sequence[ArrayLike]] = None
) -> np.ndarray:
    """i[rho, H] + sum_mu D[L_mu] rho. Rates are folded into the operators."""
    rho = np.asarray(rho, dtype=complex)
    dim = rho.shape[-1]
    ls = _stack(ls, dim)
    out = np.zeros_like(rho)
    if h is not None:
        h = np.asarray(h, dtype=complex)
        if h.shape[-1] != dim:
            raise DimensionError(f"Hamiltonian is {h.shape[-1]}-dim, state is {dim}-dim")
        out = out + unitary_rhs(rho, h)
    if len(ls):
        ld = np.swapaxes(ls.conj(), -1, -2)
        ldl = np.sum(ld @ ls, axis=0)
        jump = np.einsum("mij,...jk,mkl->...il", ls, rho, ld)
        out = out + jump - 0.5 * (rho @ ldl + ldl @ rho)
    return out


def integrate_master(
    rho0: ArrayLike,
    h: Optional[ArrayLike] = None,
    ls: Optional[Sequence[ArrayLike]] = None,
    params: IntegratorParams = IntegratorParams(),
    projectors: Optional[ProjectorSet] = None,
    tol: Tolerances = DEFAULT_TOL,
) -> TrajectoryRecord:
    rho0 = np.asarray(rho0, dtype=complex)
    dim = rho0.shape[-1]
    ham = None if h is None else np.asarray(h, dtype=complex)
    ops = _stack(ls, dim)

    def rhs(s: float, rho: np.ndarray) -> np.ndarray:
        return master_rhs(rho, ham, ops)

    return integrate_fixed_step(rho0, params, lambda s, rho: (rhs, None), projectors, tol)


@dataclass(frozen=True)
class CollapseIdentityReport:
    """Residuals of the collapse/decoherence identities at one state.

    ``pure_residual``: ||collapse_rhs(rho, P) + 2 D[rho] P|| (pure rho only).
    ``reaction``: ||D[rho] P + D[P] rho||, quadratic in rho~ = rho - P.
    ``reaction_residual``: ||D[rho] P + D[P] rho - D[rho~] P||.
    ``expansion_residual``: mismatch of the expansion about the fixed point
    (rank-1 P only).
    """

    pure_residual: Optional[float]
    reaction: float
    reaction_residual: float
    deviation_sq: float
    expansion_residual: Optional[float]
    notes: tuple[str, ...] = ()


def check_collapse_identities(
    rho: ArrayLike, p: ArrayLike, tol: Tolerances = DEFAULT_TOL, pure_tol: float = 1e-10
) -> CollapseIdentityReport:
    rho = np.asarray(rho, dtype=complex)
    p = np.asarray(p, dtype=complex)
    rank = check_projector(p, tol)
    notes = []
    flow = collapse_rhs(rho, p)
    dev = rho - p

    pure_residual = None
    if abs(purity(rho) - 1) <= pure_tol:
        pure_residual = float(np.linalg.norm(flow + 2 * dissipator(rho, p)))
    else:
        notes.append("state is mixed; pure-state identity skipped")

    reaction_op = dissipator(rho, p) + dissipator(p, rho)
    reaction_residual = float(np.linalg.norm(reaction_op - dissipator(dev, p)))

    expansion_residual = None
    if rank == 1:
        q = np.eye(p.shape[0]) - p
        expansion = (
            2 * dissipator(p, dev)
            - 2 * p @ dev @ p
            - 2 * q @ dev @ q
            - 2 * dev * np.trace(dev @ p)
        )
        expansion_residual = float(np.linalg.norm(flow - expansion))
    else:
        notes.append("projector rank > 1; fixed-point expansion skipped")

    return CollapseIdentityReport(
        pure_residual=pure_residual,
        reaction=float(np.linalg.norm(reaction_op)),
        reaction_residual=reaction_residual,
        deviation_sq=float(np.linalg.norm(dev) ** 2),
        expansion_residual=expansion_residual,
        notes=tuple(notes),
    )

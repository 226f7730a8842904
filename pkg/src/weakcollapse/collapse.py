"""Single-trajectory collapse dynamics.

A measurement with outcome projector P drives the state along

    d rho / ds = rho P + P rho - 2 rho Tr(P rho)

whose fixed point reachable from rho(0) is P rho(0) P / Tr(P rho(0)). The
closed-form geodesic maps and the diagnostics used to study the approach to
that fixed point live here as well.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from numpy.typing import ArrayLike

from .errors import DimensionError, ZeroProbabilityError
from .integrate import IntegratorParams, TrajectoryRecord, integrate_fixed_step
from .quantum import (
    DEFAULT_TOL,
    ProjectorSet,
    Tolerances,
    check_projector,
    projective_collapse,
    trace,
)


def geodesic_map_pure(psi: ArrayLike, p: ArrayLike, s: float, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Normalized ((1-s) I + s P) psi for s in [0, 1]."""
    if not 0 <= s <= 1:
        raise ValueError(f"geodesic parameter must lie in [0, 1], got {s}")
    psi = np.asarray(psi, dtype=complex)
    p = np.asarray(p, dtype=complex)
    out = (1 - s) * psi + s * (p @ psi)
    norm = np.linalg.norm(out)
    if norm <= tol.prob:
        raise ZeroProbabilityError("geodesic map annihilated the state")
    return out / norm


def geodesic_map_density(rho: ArrayLike, p: ArrayLike, s: float, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Density-matrix form of the geodesic map, normalized to unit trace."""
    if not 0 <= s <= 1:
        raise ValueError(f"geodesic parameter must lie in [0, 1], got {s}")
    rho = np.asarray(rho, dtype=complex)
    p = np.asarray(p, dtype=complex)
    num = (1 - s) ** 2 * rho + s * (1 - s) * (rho @ p + p @ rho) + s**2 * (p @ rho @ p)
    den = (1 - s) ** 2 + (2 * s - s**2) * np.trace(p @ rho).real
    if den <= tol.prob:
        raise ZeroProbabilityError("geodesic map denominator vanished")
    return num / den


def collapse_rhs(rho: ArrayLike, p: ArrayLike) -> np.ndarray:
    """rho P + P rho - 2 rho Tr(P rho); broadcasts over leading axes of ``rho``.

    ``p`` need not be a projector: the ensemble generator reuses this with
    p = sum_i w_i P_i.
    """
    rho = np.asarray(rho)
    p = np.asarray(p)
    if rho.shape[-1] != p.shape[-1]:
        raise DimensionError(f"dimension mismatch: {rho.shape[-1]} vs {p.shape[-1]}")
    rp = rho @ p
    tr = np.einsum("...ii->...", rp)
    return rp + p @ rho - 2 * tr[..., None, None] * rho


def pure_state_rhs(psi: ArrayLike, p: ArrayLike) -> np.ndarray:
    """(P - <psi|P|psi>) psi."""
    psi = np.asarray(psi, dtype=complex)
    p = np.asarray(p, dtype=complex)
    p_psi = p @ psi
    return p_psi - np.vdot(psi, p_psi).real * psi


def unitary_rhs(rho: np.ndarray, h: np.ndarray) -> np.ndarray:
    """i [rho, H]."""
    return 1j * (rho @ h - h @ rho)


def fixed_point(rho0: ArrayLike, p: ArrayLike, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Outcome state the collapse flow reaches from ``rho0``."""
    return projective_collapse(rho0, p, tol)


def fixed_point_residual(rho: ArrayLike, p: ArrayLike, tol: Tolerances = DEFAULT_TOL) -> float:
    rho = np.asarray(rho, dtype=complex)
    return float(np.linalg.norm(rho - projective_collapse(rho, p, tol)))


def integrate_trajectory(
    rho0: ArrayLike,
    p: ArrayLike,
    h: Optional[ArrayLike] = None,
    g: float = 1.0,
    params: IntegratorParams = IntegratorParams(),
    tol: Tolerances = DEFAULT_TOL,
) -> TrajectoryRecord:
    """Integrate d rho/ds = i[rho, H] + g (rho P + P rho - 2 rho Tr(P rho)).

    ``rho0`` may be a stack ``(batch, d, d)`` of initial states, all measured
    with the same projector. The record stores ``fixed_point`` computed from
    ``rho0`` and diagonal coordinates in the two-outcome set {P, I - P}.
    """
    if g < 0:
        raise ValueError("measurement rate g must be non-negative")
    rho0 = np.asarray(rho0, dtype=complex)
    p = np.asarray(p, dtype=complex)
    check_projector(p, tol)
    if rho0.shape[-1] != p.shape[-1]:
        raise DimensionError(f"dimension mismatch: state {rho0.shape[-1]}, projector {p.shape[-1]}")
    ham = None if h is None else np.asarray(h, dtype=complex)

    def rhs(s: float, rho: np.ndarray) -> np.ndarray:
        out = g * collapse_rhs(rho, p)
        if ham is not None:
            out = out + unitary_rhs(rho, ham)
        return out

    record = integrate_fixed_step(
        rho0, params, lambda s, rho: (rhs, None), ProjectorSet.from_projector(p), tol
    )
    probs = trace(p @ rho0).real
    if np.all(probs > tol.prob):
        record.fixed_point = (p @ rho0 @ p) / probs[..., None, None]
    record.meta.update(g=g, hamiltonian=ham is not None)
    return record


def convergence_exponent(
    record: TrajectoryRecord,
    p: Optional[ArrayLike] = None,
    *,
    metric: str = "frobenius",
    floor: float = 1e-12,
    ceiling: float = 1e-3,
    min_samples: int = 10,
) -> float:
    """Least-squares slope of ln(distance to the fixed point) over the tail.

    ``metric="frobenius"`` uses ||rho - rho*||_F with rho* taken from the
    record (or from ``p`` and the first sample). ``metric="population"`` uses
    the weight 1 - Tr(P rho) left outside the outcome subspace. The tail is
    the set of samples whose distance lies in [floor, ceiling].
    """
    rho = record.rho
    if rho.ndim != 3:
        raise ValueError("convergence_exponent expects a single (unbatched) trajectory")
    if metric == "frobenius":
        target = record.fixed_point
        if target is None:
            if p is None:
                raise ValueError("need a projector or a record with a fixed point")
            target = fixed_point(rho[0], p)
        dist = np.linalg.norm(rho - target, axis=(-2, -1))
    elif metric == "population":
        if p is None:
            raise ValueError("population metric needs the outcome projector")
        p = np.asarray(p, dtype=complex)
        dist = 1 - np.einsum("jk,skj->s", p, rho).real
    else:
        raise ValueError(f"unknown metric {metric!r}")
    mask = (dist >= floor) & (dist <= ceiling)
    if mask.sum() < min_samples:
        raise ValueError(
            f"only {int(mask.sum())} tail samples within [{floor:g}, {ceiling:g}]; cannot fit an exponent"
        )
    slope, _ = np.polyfit(record.s[mask], np.log(dist[mask]), 1)
    return float(slope)

"""Fixed-step integration of matrix ODEs with periodic re-normalization.

The driver is deliberately small: each step asks a ``prepare`` callback for the
right-hand side to use over that step (so noise draws and feedback shifts can
be frozen across the Runge-Kutta stages) and then advances with classical RK4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.typing import NDArray

from .errors import InvariantBreach
from .quantum import DEFAULT_TOL, ProjectorSet, Tolerances, hermitize, purity, trace

Rhs = Callable[[float, np.ndarray], np.ndarray]
# prepare(s, rho) -> (rhs for the step starting at s, auxiliary sample or None)
Prepare = Callable[[float, np.ndarray], "tuple[Rhs, Optional[np.ndarray]]"]

METHODS = ("rk4", "stochastic")


@dataclass(frozen=True)
class IntegratorParams:
    """Step size ``ds``, total duration and bookkeeping cadence.

    ``sample_every`` defaults to ``renormalize_every``. ``drift_tol`` bounds the
    trace / Hermiticity drift tolerated between two re-normalizations.
    """

    ds: float = 1e-3
    duration: float = 10.0
    renormalize_every: int = 10
    sample_every: Optional[int] = None
    method: str = "rk4"
    drift_tol: float = 1e-7
    psd_tol: float = 1e-8

    def __post_init__(self) -> None:
        if not self.ds > 0:
            raise ValueError("ds must be positive")
        if not self.duration >= self.ds:
            raise ValueError("duration must be at least one step")
        if self.renormalize_every < 1 or (self.sample_every is not None and self.sample_every < 1):
            raise ValueError("renormalize_every and sample_every must be positive integers")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")

    @property
    def n_steps(self) -> int:
        return max(1, math.ceil(self.duration / self.ds - 1e-9))

    @property
    def sample_stride(self) -> int:
        return self.sample_every or self.renormalize_every


@dataclass
class TrajectoryRecord:
    """Sampled time series of one run (or a batch of runs).

    ``rho`` has shape ``(m, *batch, d, d)``; ``projections`` holds the diagonal
    coordinates Tr(P_j rho) with shape ``(m, *batch, n)`` when a projector set
    was supplied. ``weights`` records the trajectory weights used at each
    sample, when the dynamics has any.
    """

    s: NDArray[np.float64]
    rho: NDArray[np.complex128]
    projections: Optional[NDArray[np.float64]] = None
    weights: Optional[NDArray[np.float64]] = None
    fixed_point: Optional[NDArray[np.complex128]] = None
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.s)

    @property
    def purity(self) -> NDArray[np.float64]:
        return purity(self.rho)

    @property
    def final(self) -> NDArray[np.complex128]:
        return self.rho[-1]

    def distance(self, target: Optional[np.ndarray] = None) -> NDArray[np.float64]:
        """Frobenius distance of every sample to ``target`` (default: the stored fixed point)."""
        target = self.fixed_point if target is None else target
        if target is None:
            raise ValueError("no fixed point stored on this record")
        return np.linalg.norm(self.rho - target, axis=(-2, -1))


def rk4_step(f: Rhs, s: float, y: np.ndarray, h: float) -> np.ndarray:
    k1 = f(s, y)
    k2 = f(s + h / 2, y + (h / 2) * k1)
    k3 = f(s + h / 2, y + (h / 2) * k2)
    k4 = f(s + h, y + h * k3)
    return y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def renormalize(rho: np.ndarray, drift_tol: float) -> np.ndarray:
    """Re-symmetrize and rescale to unit trace, refusing if the drift is already large."""
    herm_defect = np.max(np.abs(rho - np.swapaxes(rho.conj(), -1, -2)))
    tr = trace(rho)
    tr_defect = np.max(np.abs(tr - 1))
    if herm_defect > drift_tol or tr_defect > drift_tol:
        raise InvariantBreach(
            f"drift before re-normalization too large (hermiticity {herm_defect:.2e}, trace {tr_defect:.2e})"
        )
    rho = hermitize(rho)
    return rho / trace(rho).real[..., None, None]


def check_positive(rho: np.ndarray, s: float, psd_tol: float) -> None:
    min_eig = np.min(np.linalg.eigvalsh(rho))
    if min_eig < -psd_tol:
        raise InvariantBreach(f"state lost positivity at s={s:.6g} (min eigenvalue {min_eig:.3e})")


def integrate_fixed_step(
    rho0: np.ndarray,
    params: IntegratorParams,
    prepare: Prepare,
    projectors: Optional[ProjectorSet] = None,
    tol: Tolerances = DEFAULT_TOL,
) -> TrajectoryRecord:
    """Advance ``rho0`` (shape ``(*batch, d, d)``) and collect samples.

    The final step is shortened so that the run ends exactly at ``duration``.
    """
    rho = np.array(rho0, dtype=complex)
    n_steps, stride, renorm = params.n_steps, params.sample_stride, params.renormalize_every

    s_samples: list[float] = []
    rho_samples: list[np.ndarray] = []
    aux_samples: list[Optional[np.ndarray]] = []

    def record(s: float, rho: np.ndarray, aux: Optional[np.ndarray]) -> None:
        check_positive(rho, s, params.psd_tol)
        s_samples.append(s)
        rho_samples.append(rho.copy())
        aux_samples.append(None if aux is None else np.array(aux, dtype=float))

    s = 0.0
    for k in range(n_steps):
        f, aux = prepare(s, rho)
        if k % stride == 0:
            record(s, rho, aux)
        h = min(params.ds, params.duration - s) if k == n_steps - 1 else params.ds
        rho = rk4_step(f, s, rho, h)
        s = params.duration if k == n_steps - 1 else (k + 1) * params.ds
        if not np.all(np.isfinite(rho)):
            raise InvariantBreach(f"non-finite state at s={s:.6g}")
        if (k + 1) % renorm == 0 or k == n_steps - 1:
            rho = renormalize(rho, params.drift_tol)
    _, aux = prepare(s, rho)
    record(s, rho, aux)

    rho_arr = np.array(rho_samples)
    weights = None
    if all(a is not None for a in aux_samples):
        weights = np.array(aux_samples)
    projections = None
    if projectors is not None:
        projections = np.einsum("ijk,...kj->...i", projectors.matrices, rho_arr).real
    return TrajectoryRecord(np.array(s_samples), rho_arr, projections, weights)


def integrate_vector_field(
    f: Callable[[float, np.ndarray], np.ndarray],
    y0: np.ndarray,
    params: IntegratorParams,
) -> tuple[NDArray[np.float64], np.ndarray]:
    """Plain RK4 on a vector ODE sampled on the same grid as ``integrate_fixed_step``."""
    y = np.array(y0, dtype=float)
    n_steps, stride = params.n_steps, params.sample_stride
    ss, ys = [], []
    s = 0.0
    for k in range(n_steps):
        if k % stride == 0:
            ss.append(s)
            ys.append(y.copy())
        h = min(params.ds, params.duration - s) if k == n_steps - 1 else params.ds
        y = rk4_step(f, s, y, h)
        s = params.duration if k == n_steps - 1 else (k + 1) * params.ds
    ss.append(s)
    ys.append(y.copy())
    return np.array(ss), np.array(ys)

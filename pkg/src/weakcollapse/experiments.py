"""Reference experiments: Rabi feedback, Bell-state J_z x J_z, measurement-only QEC.

The feedback experiments drive a Rabi oscillation while a weak measurement
(noisy instantaneous-Born weights) perturbs it. A proportional controller
reads the oscillation phase off the simulated state and shifts the Rabi
frequency to keep the trajectory locked to the unperturbed reference.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import expm

from .collapse import unitary_rhs
from .ensemble import (
    WeightStrategy,
    diagonal_coordinates,
    ensemble_rhs,
    integrate_diagonal,
    integrate_ensemble,
)
from .integrate import IntegratorParams, TrajectoryRecord, integrate_fixed_step
from .quantum import (
    IDENTITY_2,
    SIGMA_X,
    ProjectorSet,
    bell_state,
    density,
    ket,
    partial_trace,
    state_overlap,
)


@dataclass
class ExperimentRecord:
    trajectory: TrajectoryRecord
    reference: Optional[NDArray[np.complex128]] = None
    fidelity: Optional[NDArray[np.float64]] = None
    feedback: Optional[NDArray[np.float64]] = None
    logical_weight: Optional[NDArray[np.float64]] = None
    metrics: dict = field(default_factory=dict)

    @property
    def s(self) -> NDArray[np.float64]:
        return self.trajectory.s


# ------------------------------------------------------------ feedback runs

@dataclass(frozen=True)
class RabiFeedbackConfig:
    """Weakly measured Rabi oscillation with frequency-shift feedback.

    ``gain`` is the fraction of the current phase error removed per step;
    shifts are clamped to ``max_shift * omega``. ``actuator`` only matters for
    the two-qubit run: "joint" shifts both drives together, "individual"
    measures each qubit separately and shifts each drive on its own.
    """

    omega: float = 1.0
    g: float = 0.1
    epsilon: float = 0.05
    gain: float = 0.0
    duration: float = 10 * np.pi
    ds: float = 0.01
    seed: int = 0
    max_shift: float = 0.5
    renormalize_every: int = 10
    actuator: str = "joint"

    def __post_init__(self) -> None:
        if self.omega < 0 or self.g < 0 or self.epsilon < 0 or self.gain < 0:
            raise ValueError("omega, g, epsilon and gain must be non-negative")
        if self.duration <= 0 or self.ds <= 0 or self.ds > self.duration:
            raise ValueError("need 0 < ds <= duration")
        if self.actuator not in ("joint", "individual"):
            raise ValueError(f"actuator must be 'joint' or 'individual', got {self.actuator!r}")

    @property
    def params(self) -> IntegratorParams:
        return IntegratorParams(
            ds=self.ds, duration=self.duration, renormalize_every=self.renormalize_every, method="stochastic"
        )


def _wrap(angle: NDArray[np.float64]) -> NDArray[np.float64]:
    return (angle + np.pi) % (2 * np.pi) - np.pi


def _plane_phase(rho: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    """Rotation angle of rho in the plane spanned by |a>, |b> (0 at |a>, pi at |b>)."""
    z = np.vdot(a, rho @ a).real - np.vdot(b, rho @ b).real
    sin = 2 * np.vdot(a, rho @ b).imag
    return float(np.arctan2(sin, z))


def _feedback_run(
    cfg: RabiFeedbackConfig,
    rho0: np.ndarray,
    projectors: ProjectorSet,
    drives: Sequence[np.ndarray],
    phase_probes: Sequence,
    phase_rates: Sequence[float],
) -> ExperimentRecord:
    """Shared engine: H(s) = sum_k (omega + shift_k) drive_k, noisy Born weights."""
    rng = np.random.default_rng(cfg.seed)
    n = len(projectors)
    strategy = WeightStrategy.noisy(cfg.epsilon)
    h0 = cfg.omega * sum(drives)
    limit = cfg.max_shift * cfg.omega
    rates = np.asarray(phase_rates, dtype=float)

    def prepare(s: float, rho: np.ndarray):
        d = diagonal_coordinates(rho, projectors)
        xi = rng.standard_normal(n)
        noise = cfg.epsilon * (xi - xi.mean()) / np.sqrt(cfg.ds)
        if cfg.gain > 0:
            phases = np.array([probe(rho) for probe in phase_probes])
            err = _wrap(phases - rates * s)
            shifts = np.clip(-cfg.gain * err / cfg.ds, -limit, limit)
        else:
            shifts = np.zeros(len(drives))
        ham = h0 + sum(dk * op for dk, op in zip(shifts, drives))

        def rhs(s_: float, r: np.ndarray) -> np.ndarray:
            w = diagonal_coordinates(r, projectors) + noise
            return cfg.g * ensemble_rhs(r, projectors, w) + unitary_rhs(r, ham)

        return rhs, np.concatenate([d + noise, shifts])

    rec = integrate_fixed_step(rho0, cfg.params, prepare, projectors)
    aux = rec.weights
    rec.weights = aux[:, :n]
    rec.meta.update(strategy=strategy.kind, epsilon=cfg.epsilon, g=cfg.g, seed=cfg.seed)

    reference = np.array([_evolve_unitary(rho0, h0, s) for s in rec.s])
    fid = state_overlap(rec.rho, reference)
    metrics = {
        "mean_fidelity": float(np.mean(fid)),
        "final_fidelity": float(fid[-1]),
        "gain": cfg.gain,
        "seed": cfg.seed,
    }
    return ExperimentRecord(rec, reference, fid, aux[:, n:], metrics=metrics)


def _evolve_unitary(rho0: np.ndarray, h: np.ndarray, s: float) -> np.ndarray:
    u = expm(-1j * h * s)
    return u @ rho0 @ u.conj().T


def rabi_feedback_run(cfg: RabiFeedbackConfig) -> ExperimentRecord:
    """Single qubit from |0>, H = (omega + shift) sigma_x / 2, weak sigma_z measurement."""
    zero, one = ket(0, 2), ket(1, 2)
    return _feedback_run(
        cfg,
        density(zero),
        ProjectorSet.computational(2),
        [SIGMA_X / 2],
        [lambda r: _plane_phase(r, zero, one)],
        [cfg.omega],
    )


def bell_jzjz_run(cfg: RabiFeedbackConfig, initial: str = "phi+") -> ExperimentRecord:
    """Two qubits under joint Rabi drive while J_z x J_z is weakly measured.

    With the joint actuator the projectors are the two rank-2 eigenspaces of
    sigma_z x sigma_z and the phase is read in the {phi+, psi+} plane, which
    the joint drive rotates at 2 omega. The individual actuator instead
    measures sigma_z on each qubit (four rank-1 outcomes) and feeds each
    qubit's reduced-state phase back into its own drive.
    """
    rho0 = density(bell_state(initial))
    x1 = np.kron(SIGMA_X, IDENTITY_2) / 2
    x2 = np.kron(IDENTITY_2, SIGMA_X) / 2
    if cfg.actuator == "joint":
        projectors = jzjz_projectors()
        phi, psi = bell_state("phi+"), bell_state("psi+")
        return _feedback_run(
            cfg, rho0, projectors, [x1 + x2], [lambda r: _plane_phase(r, phi, psi)], [2 * cfg.omega]
        )
    zero, one = ket(0, 2), ket(1, 2)
    probes = [
        lambda r: _plane_phase(partial_trace(r, (2, 2), 0), zero, one),
        lambda r: _plane_phase(partial_trace(r, (2, 2), 1), zero, one),
    ]
    return _feedback_run(
        cfg, rho0, ProjectorSet.computational(4), [x1, x2], probes, [cfg.omega, cfg.omega]
    )


def jzjz_projectors() -> ProjectorSet:
    """Eigenspaces of sigma_z x sigma_z: even {00, 11} and odd {01, 10} parity."""
    return ProjectorSet.from_subspaces(4, [(0, 3), (1, 2)], labels=("+1", "-1"))


def feedback_gain_sweep(
    cfg: RabiFeedbackConfig,
    gains: Sequence[float],
    seeds: Sequence[int],
    two_qubit: bool = False,
) -> dict[float, float]:
    """Mean time-averaged fidelity for each gain, averaged over ``seeds``."""
    run = bell_jzjz_run if two_qubit else rabi_feedback_run
    table = {}
    for gain in gains:
        fids = [run(replace(cfg, gain=gain, seed=seed)).metrics["mean_fidelity"] for seed in seeds]
        table[float(gain)] = float(np.mean(fids))
    return table


# ---------------------------------------------------------------------- QEC

@dataclass(frozen=True)
class QecConfig:
    """Measurement-only recovery into a repetition-code logical subspace.

    The initial state is sqrt(d_L) |L> + sqrt(1 - d_L) X_k |L> where
    |L> = a|0..0> + b|1..1> and X_k flips qubit ``error_qubit``.
    """

    n_qubits: int = 3
    logical_weight: float = 0.7
    logical_amplitudes: tuple[complex, complex] = (np.cos(np.pi / 8), np.sin(np.pi / 8) * np.exp(0.25j * np.pi))
    error_qubit: int = 0
    duration: float = 10.0
    ds: float = 1e-3
    renormalize_every: int = 10
    strategy: str = "instantaneous-born"

    def __post_init__(self) -> None:
        if self.n_qubits < 2:
            raise ValueError("need at least two qubits")
        if not 0 <= self.logical_weight <= 1:
            raise ValueError("logical weight must lie in [0, 1]")
        if not 0 <= self.error_qubit < self.n_qubits:
            raise ValueError("error qubit out of range")

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    @property
    def params(self) -> IntegratorParams:
        return IntegratorParams(ds=self.ds, duration=self.duration, renormalize_every=self.renormalize_every)

    def projectors(self) -> ProjectorSet:
        logical = (0, self.dim - 1)
        error = tuple(i for i in range(self.dim) if i not in logical)
        return ProjectorSet.from_subspaces(self.dim, [logical, error], labels=("logical", "error"))

    def logical_state(self) -> np.ndarray:
        a, b = self.logical_amplitudes
        psi = np.zeros(self.dim, dtype=complex)
        psi[0], psi[-1] = a, b
        return psi / np.linalg.norm(psi)

    def initial_state(self) -> np.ndarray:
        logical = self.logical_state()
        flip = 1 << (self.n_qubits - 1 - self.error_qubit)
        corrupted = logical[np.arange(self.dim) ^ flip]
        psi = np.sqrt(self.logical_weight) * logical + np.sqrt(1 - self.logical_weight) * corrupted
        return density(psi / np.linalg.norm(psi))


def qec_scalar_rhs(d: float) -> float:
    """Logical weight flow 2 d (1 - d)(2 d - 1) under instantaneous-Born weights."""
    return 2 * d * (1 - d) * (2 * d - 1)


def qec_demo_run(cfg: QecConfig) -> ExperimentRecord:
    projectors = cfg.projectors()
    rho0 = cfg.initial_state()
    strategy = WeightStrategy(cfg.strategy)
    rec = integrate_ensemble(rho0, projectors, strategy, params=cfg.params)
    d_l = rec.projections[:, 0]

    _, oracle = integrate_diagonal(rec.projections[0], strategy, cfg.params)
    logical = cfg.logical_state()
    block = np.einsum("ij,sjk,kl->sil", projectors[0], rec.rho, projectors[0])
    with np.errstate(invalid="ignore", divide="ignore"):
        logical_fid = np.einsum("i,sij,j->s", logical.conj(), block, logical).real / d_l
    degenerate = bool(abs(d_l[0] - 0.5) < 1e-12)
    metrics = {
        "initial_logical_weight": float(d_l[0]),
        "final_logical_weight": float(d_l[-1]),
        "oracle_max_deviation": float(np.max(np.abs(d_l - oracle[:, 0]))),
        "final_logical_fidelity": float(logical_fid[-1]) if d_l[-1] > 1e-12 else None,
        "degenerate": degenerate,
        "recovered": bool(d_l[-1] > 0.5) if not degenerate else None,
    }
    return ExperimentRecord(rec, logical_weight=d_l, metrics=metrics)

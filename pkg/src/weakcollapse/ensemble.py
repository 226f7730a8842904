"""Trajectory-weighted ensemble evolution.

Averaging the collapse flow over outcome branches with weights w_i gives

    d rho / ds = sum_i w_i [rho P_i + P_i rho - 2 rho Tr(P_i rho)],

which is ``collapse_rhs`` evaluated at W = sum_i w_i P_i. Every block
P_j rho P_k is only rescaled by a real factor, so the diagonal coordinates
d_j = Tr(P_j rho) determine the whole state (see ``offdiagonal_closed_form``).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .collapse import collapse_rhs, unitary_rhs
from .errors import DimensionError, QuantumStateError
from .integrate import IntegratorParams, TrajectoryRecord, integrate_fixed_step, integrate_vector_field
from .quantum import DEFAULT_TOL, ProjectorSet, Tolerances, born_probabilities

UNIFORM = "uniform"
FROZEN_BORN = "frozen-born"
INSTANTANEOUS_BORN = "instantaneous-born"
NOISY_BORN = "noisy-instantaneous-born"
FIXED_OUTCOME = "fixed-outcome"
STRATEGY_KINDS = (UNIFORM, FROZEN_BORN, INSTANTANEOUS_BORN, NOISY_BORN, FIXED_OUTCOME)


@dataclass(frozen=True)
class WeightStrategy:
    """Rule producing the trajectory weights w_i from the current state.

    ``epsilon`` is the white-noise intensity of ``noisy-instantaneous-born``;
    ``outcome`` the branch index of ``fixed-outcome``.
    """

    kind: str
    epsilon: float = 0.0
    outcome: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"unknown weight strategy {self.kind!r}; choose from {STRATEGY_KINDS}")
        if self.epsilon < 0:
            raise ValueError("noise amplitude must be non-negative")
        if self.kind == FIXED_OUTCOME and self.outcome is None:
            raise ValueError("fixed-outcome strategy needs an outcome index")

    @classmethod
    def uniform(cls) -> "WeightStrategy":
        return cls(UNIFORM)

    @classmethod
    def frozen_born(cls) -> "WeightStrategy":
        return cls(FROZEN_BORN)

    @classmethod
    def instantaneous_born(cls) -> "WeightStrategy":
        return cls(INSTANTANEOUS_BORN)

    @classmethod
    def noisy(cls, epsilon: float) -> "WeightStrategy":
        return cls(NOISY_BORN, epsilon=epsilon)

    @classmethod
    def fixed(cls, outcome: int) -> "WeightStrategy":
        return cls(FIXED_OUTCOME, outcome=outcome)

    @property
    def stochastic(self) -> bool:
        return self.kind == NOISY_BORN and self.epsilon > 0


def _weights_from_diagonal(
    strategy: WeightStrategy,
    d: NDArray[np.float64],
    d_init: Optional[NDArray[np.float64]] = None,
    noise: Optional[ArrayLike] = None,
    ds: Optional[float] = None,
) -> NDArray[np.float64]:
    n = d.shape[-1]
    kind = strategy.kind
    if kind == UNIFORM:
        return np.full(d.shape, 1.0 / n)
    if kind == FROZEN_BORN:
        if d_init is None:
            raise ValueError("frozen-born weights need the initial Born probabilities")
        return np.broadcast_to(d_init, d.shape).copy()
    if kind == FIXED_OUTCOME:
        if not 0 <= strategy.outcome < n:
            raise ValueError(f"outcome {strategy.outcome} out of range for {n} projectors")
        w = np.zeros(d.shape)
        w[..., strategy.outcome] = 1.0
        return w
    w = np.array(d, dtype=float)
    if kind == NOISY_BORN and noise is not None and strategy.epsilon > 0:
        if ds is None:
            raise ValueError("noisy weights need the step size to scale the white noise")
        xi = np.asarray(noise, dtype=float)
        if xi.shape[-1] != n:
            raise DimensionError(f"need one noise draw per projector ({n}), got {xi.shape[-1]}")
        # zero-sum noise keeps sum(w) = 1; uniform offsets cancel in the generator
        xi = xi - xi.mean(axis=-1, keepdims=True)
        w = w + strategy.epsilon * xi / np.sqrt(ds)
    return w


def compute_weights(
    strategy: WeightStrategy,
    rho: ArrayLike,
    projectors: ProjectorSet,
    noise: Optional[ArrayLike] = None,
    *,
    rho_init: Optional[ArrayLike] = None,
    ds: Optional[float] = None,
    tol: Tolerances = DEFAULT_TOL,
) -> NDArray[np.float64]:
    """Weight vector for the current state.

    For the noisy strategy ``noise`` is one standard-normal draw per projector
    for the step of length ``ds``; the returned weights are the instantaneous
    Born weights plus white noise of intensity epsilon, held over that step.
    These samples sum to one but are not clamped: individual entries may be
    negative when the noise dominates.
    """
    d = born_probabilities(rho, projectors, tol)
    d_init = None if rho_init is None else born_probabilities(rho_init, projectors, tol)
    return _weights_from_diagonal(strategy, d, d_init, noise, ds)


def diagonal_coordinates(rho: ArrayLike, projectors: ProjectorSet) -> NDArray[np.float64]:
    """d_j = Tr(P_j rho)."""
    return np.einsum("ijk,...kj->...i", projectors.matrices, np.asarray(rho)).real


def ensemble_rhs(rho: ArrayLike, projectors: ProjectorSet, w: ArrayLike) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape[-1] != len(projectors):
        raise DimensionError(f"{w.shape[-1]} weights for {len(projectors)} projectors")
    return collapse_rhs(rho, projectors.combine(w))


def diagonal_rhs(d: ArrayLike, w: ArrayLike) -> NDArray[np.float64]:
    """Replicator-type flow d_j' = 2 d_j (w_j - sum_i w_i d_i)."""
    d = np.asarray(d, dtype=float)
    w = np.asarray(w, dtype=float)
    mean = np.sum(w * d, axis=-1, keepdims=True)
    return 2 * d * (w - mean)


def offdiagonal_closed_form(
    rho0: ArrayLike,
    projectors: ProjectorSet,
    d_now: ArrayLike,
    d_init: Optional[ArrayLike] = None,
    tol: Tolerances = DEFAULT_TOL,
) -> np.ndarray:
    """Rebuild rho(s) from rho(0) and the diagonal flow.

    Each block is rescaled, P_j rho(s) P_k = P_j rho(0) P_k sqrt(d_j d_k / d_j(0) d_k(0)),
    i.e. rho(s) = C rho(0) C with C = sum_j sqrt(d_j / d_j(0)) P_j.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    d_now = np.asarray(d_now, dtype=float)
    d_init = diagonal_coordinates(rho0, projectors) if d_init is None else np.asarray(d_init, dtype=float)
    scale = np.zeros(np.broadcast_shapes(d_now.shape, d_init.shape))
    empty = d_init <= tol.prob
    for j in np.flatnonzero(empty):
        # a vanishing diagonal block of a PSD state forces the whole row of blocks to vanish
        if np.linalg.norm(projectors[j] @ rho0) > np.sqrt(tol.prob):
            raise QuantumStateError(f"initial diagonal {j} vanishes but its off-diagonal blocks do not")
    scale[..., ~empty] = np.sqrt(np.clip(d_now[..., ~empty], 0, None) / d_init[~empty])
    c = projectors.combine(scale)
    return c @ rho0 @ c


def integrate_diagonal(
    d0: ArrayLike,
    strategy: WeightStrategy,
    params: IntegratorParams,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """RK4 on the diagonal coordinates alone (deterministic strategies only)."""
    if strategy.stochastic:
        raise ValueError("the scalar diagonal flow is only defined for deterministic strategies")
    d0 = np.asarray(d0, dtype=float)

    def f(s: float, d: np.ndarray) -> np.ndarray:
        return diagonal_rhs(d, _weights_from_diagonal(strategy, d, d0))

    return integrate_vector_field(f, d0, params)


def integrate_ensemble(
    rho0: ArrayLike,
    projectors: ProjectorSet,
    strategy: WeightStrategy,
    h: Optional[ArrayLike] = None,
    g: float = 1.0,
    params: IntegratorParams = IntegratorParams(),
    rng: Optional[np.random.Generator] = None,
    *,
    sample_outcome: bool = False,
    tol: Tolerances = DEFAULT_TOL,
) -> TrajectoryRecord:
    """Evolve the weighted ensemble equation, optionally with a Hamiltonian.

    Deterministic strategies re-evaluate weights at every RK4 stage. The noisy
    strategy draws fresh weight noise once per step from ``rng`` and holds it
    over that step. With ``sample_outcome=True`` a frozen-Born run first draws
    its branch i from the initial Born probabilities and then follows the
    fixed-outcome flow toward P_i; ``meta["outcome"]`` records the draw.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.ndim != 2:
        raise DimensionError("integrate_ensemble evolves a single d x d state")
    if rho0.shape[-1] != projectors.dim:
        raise DimensionError(f"state is {rho0.shape[-1]}-dim, projectors are {projectors.dim}-dim")
    ham = None if h is None else np.asarray(h, dtype=complex)
    d_init = born_probabilities(rho0, projectors, tol)
    meta: dict = {"strategy": strategy.kind, "epsilon": strategy.epsilon, "g": g}

    if sample_outcome and strategy.kind == FROZEN_BORN:
        if rng is None:
            raise ValueError("sampling an outcome needs a random generator")
        outcome = draw_outcome(d_init, rng)
        strategy = WeightStrategy.fixed(outcome)
        meta["outcome"] = outcome
    if strategy.stochastic and rng is None:
        raise ValueError("noisy weights need a random generator")
    if strategy.stochastic and params.method != "stochastic":
        params = replace(params, method="stochastic")

    def drift(rho: np.ndarray, w: np.ndarray) -> np.ndarray:
        out = g * ensemble_rhs(rho, projectors, w)
        if ham is not None:
            out = out + unitary_rhs(rho, ham)
        return out

    def weights_at(rho: np.ndarray) -> np.ndarray:
        return _weights_from_diagonal(strategy, diagonal_coordinates(rho, projectors), d_init)

    if strategy.stochastic:
        n = len(projectors)

        def prepare(s, rho):
            xi = rng.standard_normal(n)
            xi = strategy.epsilon * (xi - xi.mean()) / np.sqrt(params.ds)
            return (lambda s_, r: drift(r, weights_at(r) + xi)), weights_at(rho) + xi

    else:

        def prepare(s, rho):
            return (lambda s_, r: drift(r, weights_at(r))), weights_at(rho)

    record = integrate_fixed_step(rho0, params, prepare, projectors, tol)
    record.meta.update(meta)
    return record


def draw_outcome(probabilities: NDArray[np.float64], rng: np.random.Generator) -> int:
    k = int(np.searchsorted(np.cumsum(probabilities), rng.random(), side="right"))
    return min(k, len(probabilities) - 1)


def trajectory_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    """Stream for trajectory ``index``: SeedSequence(master_seed, spawn_key=(index,))."""
    return np.random.SeedSequence(master_seed, spawn_key=(index,))


@dataclass
class EnsembleStatistics:
    counts: NDArray[np.int64]
    born: NDArray[np.float64]
    s: NDArray[np.float64]
    mean_rho: NDArray[np.complex128]
    seeds: NDArray[np.uint64]
    outcomes: NDArray[np.int64]
    deterministic: bool
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def frequencies(self) -> NDArray[np.float64]:
        return self.counts / self.n

    @property
    def z_scores(self) -> NDArray[np.float64]:
        """Binomial z-score of each empirical frequency against its Born probability."""
        sigma = np.sqrt(self.born * (1 - self.born) / self.n)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = (self.frequencies - self.born) / sigma
        return np.where(sigma > 0, z, np.where(self.frequencies == self.born, 0.0, np.inf))

    def mean_record(self, projectors: Optional[ProjectorSet] = None) -> TrajectoryRecord:
        proj = None if projectors is None else diagonal_coordinates(self.mean_rho, projectors)
        return TrajectoryRecord(self.s, self.mean_rho, proj)


def run_ensemble(
    n: int,
    rho0: ArrayLike,
    projectors: ProjectorSet,
    strategy: WeightStrategy,
    params: IntegratorParams = IntegratorParams(),
    seed: int = 0,
    h: Optional[ArrayLike] = None,
    g: float = 1.0,
    threads: int = 1,
    tol: Tolerances = DEFAULT_TOL,
) -> EnsembleStatistics:
    """Run ``n`` independent trajectories and tally their outcomes.

    Trajectory i uses the stream ``trajectory_seed(seed, i)`` regardless of
    thread count, so results are reproducible bit for bit. A trajectory's
    outcome is the projector carrying the largest final diagonal weight.
    Deterministic flows are integrated once per distinct branch and shared.
    """
    if n < 1:
        raise ValueError("ensemble size must be at least 1")
    rho0 = np.asarray(rho0, dtype=complex)
    seqs = [trajectory_seed(seed, i) for i in range(n)]
    seeds = np.array([ss.generate_state(1, np.uint64)[0] for ss in seqs], dtype=np.uint64)
    born = born_probabilities(rho0, projectors, tol)
    cache: dict[int, TrajectoryRecord] = {}

    def branch(i: int) -> tuple[int, Optional[TrajectoryRecord]]:
        rng = np.random.default_rng(seqs[i])
        if strategy.stochastic:
            return -1, integrate_ensemble(rho0, projectors, strategy, h, g, params, rng, tol=tol)
        if strategy.kind == FROZEN_BORN:
            return draw_outcome(born, rng), None
        return 0, None

    outcomes = np.empty(n, dtype=np.int64)
    rho_sum = None
    branch_counts: dict[int, int] = {}
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        for i, (key, rec) in enumerate(pool.map(branch, range(n))):
            if rec is None:
                if key not in cache:
                    flow = WeightStrategy.fixed(key) if strategy.kind == FROZEN_BORN else strategy
                    cache[key] = integrate_ensemble(rho0, projectors, flow, h, g, params, tol=tol)
                branch_counts[key] = branch_counts.get(key, 0) + 1
                rec = cache[key]
            else:
                rho_sum = rec.rho.copy() if rho_sum is None else rho_sum + rec.rho
            outcomes[i] = int(np.argmax(rec.projections[-1]))
            s_grid = rec.s
    for key in sorted(branch_counts):
        term = branch_counts[key] * cache[key].rho
        rho_sum = term if rho_sum is None else rho_sum + term
    counts = np.bincount(outcomes, minlength=len(projectors)).astype(np.int64)

    return EnsembleStatistics(
        counts=counts,
        born=born,
        s=s_grid,
        mean_rho=rho_sum / n,
        seeds=seeds,
        outcomes=outcomes,
        deterministic=not strategy.stochastic and strategy.kind != FROZEN_BORN,
        meta={"strategy": strategy.kind, "epsilon": strategy.epsilon, "g": g, "master_seed": seed},
    )

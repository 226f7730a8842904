"""Dense density-matrix algebra.

States and operators are plain complex numpy arrays. Most functions accept a
stack of matrices with shape ``(..., d, d)`` and broadcast over the leading
axes, which the integrators rely on to evolve many trajectories at once.

Two-party tensor products follow the ``np.kron`` convention: subsystem A is
the slow (most significant) index, so basis state ``|a b>`` sits at
``a * d_B + b``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DimensionError, QuantumStateError, ZeroProbabilityError

ComplexArray = NDArray[np.complex128]

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class Tolerances:
    herm: float = 1e-10
    idem: float = 1e-10
    trace: float = 1e-9
    psd: float = 1e-9
    norm: float = 1e-12
    prob: float = 1e-12


DEFAULT_TOL = Tolerances()


# ---------------------------------------------------------------- helpers

def dagger(a: ArrayLike) -> ComplexArray:
    a = np.asarray(a)
    return np.swapaxes(a.conj(), -1, -2)


def trace(a: ArrayLike) -> NDArray:
    return np.einsum("...ii->...", np.asarray(a))


def purity(rho: ArrayLike) -> NDArray[np.float64]:
    """Tr(rho^2) for Hermitian rho (or a stack of them)."""
    rho = np.asarray(rho)
    # Tr(rho rho) = sum |rho_ij|^2 for Hermitian rho
    return np.einsum("...ij,...ji->...", rho, rho).real


def commutator(a: ArrayLike, b: ArrayLike) -> ComplexArray:
    a, b = np.asarray(a), np.asarray(b)
    return a @ b - b @ a


def anticommutator(a: ArrayLike, b: ArrayLike) -> ComplexArray:
    a, b = np.asarray(a), np.asarray(b)
    return a @ b + b @ a


def hermitize(a: ArrayLike) -> ComplexArray:
    a = np.asarray(a, dtype=complex)
    return 0.5 * (a + dagger(a))


def _require_square(a: np.ndarray, name: str = "matrix") -> int:
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise DimensionError(f"{name} must be square, got shape {a.shape}")
    return a.shape[-1]


def _require_same_dim(rho: np.ndarray, op: np.ndarray) -> None:
    if rho.shape[-1] != op.shape[-1]:
        raise DimensionError(
            f"dimension mismatch: state is {rho.shape[-1]}-dim, operator is {op.shape[-1]}-dim"
        )


# ------------------------------------------------------------ constructors

def ket(index: int, dim: int) -> ComplexArray:
    psi = np.zeros(dim, dtype=complex)
    psi[index] = 1.0
    return psi


def plus_state() -> ComplexArray:
    return np.array([1, 1], dtype=complex) / np.sqrt(2)


def bell_state(kind: str = "phi+") -> ComplexArray:
    """Two-qubit Bell vector; ``kind`` is one of phi+, phi-, psi+, psi-."""
    s = 1 / np.sqrt(2)
    table = {
        "phi+": [s, 0, 0, s],
        "phi-": [s, 0, 0, -s],
        "psi+": [0, s, s, 0],
        "psi-": [0, s, -s, 0],
    }
    try:
        return np.array(table[kind], dtype=complex)
    except KeyError:
        raise ValueError(f"unknown Bell state {kind!r}") from None


def normalize(psi: ArrayLike) -> ComplexArray:
    psi = np.asarray(psi, dtype=complex)
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise QuantumStateError("cannot normalize the zero vector")
    return psi / norm


def density(psi: ArrayLike, tol: Tolerances = DEFAULT_TOL) -> ComplexArray:
    """|psi><psi| for a unit vector (or a stack of them)."""
    psi = np.asarray(psi, dtype=complex)
    norms = np.linalg.norm(psi, axis=-1)
    if np.any(np.abs(norms - 1) > tol.norm):
        raise QuantumStateError(f"state vector is not normalized (|psi| = {norms})")
    return psi[..., :, None] * psi[..., None, :].conj()


def random_pure_state(dim: int, rng: np.random.Generator) -> ComplexArray:
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return psi / np.linalg.norm(psi)


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> ComplexArray:
    """Random mixed state from the induced (Ginibre) measure."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return hermitize(rho / np.trace(rho).real)


def random_hermitian(dim: int, rng: np.random.Generator) -> ComplexArray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return hermitize(a)


def random_unitary(dim: int, rng: np.random.Generator) -> ComplexArray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


# -------------------------------------------------------------- validation

@dataclass(frozen=True)
class ValidationReport:
    hermiticity_defect: float
    trace_defect: float
    min_eigenvalue: float
    purity: float
    passed: bool

    def __bool__(self) -> bool:
        return self.passed


def validate_density(rho: ArrayLike, tol: Tolerances = DEFAULT_TOL) -> ValidationReport:
    """Check Hermiticity, unit trace and positivity of a single density matrix."""
    rho = np.asarray(rho, dtype=complex)
    _require_square(rho, "density matrix")
    if rho.ndim != 2:
        raise DimensionError(f"expected a single d x d matrix, got shape {rho.shape}")
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    tr_defect = float(abs(np.trace(rho) - 1))
    # symmetric solver on the Hermitian part; tolerant of tiny anti-Hermitian noise
    min_eig = float(np.linalg.eigvalsh(hermitize(rho))[0])
    passed = herm <= tol.herm and tr_defect <= tol.trace and min_eig >= -tol.psd
    return ValidationReport(herm, tr_defect, min_eig, float(purity(hermitize(rho))), passed)


def check_projector(p: ArrayLike, tol: Tolerances = DEFAULT_TOL) -> int:
    """Validate a Hermitian idempotent and return its rank."""
    p = np.asarray(p, dtype=complex)
    _require_square(p, "projector")
    if np.max(np.abs(p - p.conj().T)) > tol.herm:
        raise QuantumStateError("projector is not Hermitian")
    if np.max(np.abs(p @ p - p)) > tol.idem:
        raise QuantumStateError("projector is not idempotent")
    rank = int(round(np.trace(p).real))
    eig_rank = int(np.sum(np.linalg.eigvalsh(hermitize(p)) > 0.5))
    if rank != eig_rank or rank < 1:
        raise QuantumStateError(f"projector rank mismatch (trace {rank}, spectrum {eig_rank})")
    return rank


@dataclass(frozen=True)
class ProjectorSet:
    """Complete set of mutually orthogonal projectors (a measured observable).

    ``matrices`` has shape ``(n, d, d)``. Projectors may have any rank.
    """

    matrices: ComplexArray
    labels: tuple = ()
    ranks: tuple[int, ...] = field(init=False)
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self) -> None:
        mats = np.array(self.matrices, dtype=complex)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise DimensionError(f"projector stack must have shape (n, d, d), got {mats.shape}")
        n, d, _ = mats.shape
        if n < 2:
            raise QuantumStateError("a projector set needs at least two projectors")
        ranks = tuple(check_projector(p, self.tol) for p in mats)
        if np.max(np.abs(mats.sum(axis=0) - np.eye(d))) > self.tol.idem:
            raise QuantumStateError("projectors do not sum to the identity")
        for i in range(n):
            for j in range(i + 1, n):
                if np.max(np.abs(mats[i] @ mats[j])) > self.tol.idem:
                    raise QuantumStateError(f"projectors {i} and {j} are not orthogonal")
        labels = tuple(self.labels) if self.labels else tuple(range(n))
        if len(labels) != n:
            raise ValueError("need one label per projector")
        mats.setflags(write=False)
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "ranks", ranks)

    @property
    def dim(self) -> int:
        return self.matrices.shape[1]

    def __len__(self) -> int:
        return self.matrices.shape[0]

    def __getitem__(self, i: int) -> ComplexArray:
        return self.matrices[i]

    def __iter__(self) -> Iterator[ComplexArray]:
        return iter(self.matrices)

    def combine(self, weights: ArrayLike) -> ComplexArray:
        """sum_i w_i P_i; ``weights`` may carry leading batch axes."""
        w = np.asarray(weights)
        return np.einsum("...i,ijk->...jk", w, self.matrices)

    @classmethod
    def computational(cls, dim: int) -> "ProjectorSet":
        return cls(np.array([np.outer(ket(i, dim), ket(i, dim)) for i in range(dim)]))

    @classmethod
    def from_subspaces(cls, dim: int, subspaces: Sequence[Sequence[int]], labels=()) -> "ProjectorSet":
        """Projectors onto spans of computational basis states."""
        mats = []
        for idx in subspaces:
            p = np.zeros((dim, dim), dtype=complex)
            p[list(idx), list(idx)] = 1.0
            mats.append(p)
        return cls(np.array(mats), labels=tuple(labels))

    @classmethod
    def from_projector(cls, p: ArrayLike) -> "ProjectorSet":
        """The two-outcome set {P, I - P}."""
        p = np.asarray(p, dtype=complex)
        return cls(np.array([p, np.eye(p.shape[0]) - p]))

    @classmethod
    def from_hermitian(cls, a: ArrayLike, atol: float = 1e-8) -> "ProjectorSet":
        """Spectral projectors of a Hermitian matrix; near-equal eigenvalues are merged."""
        a = np.asarray(a, dtype=complex)
        vals, vecs = np.linalg.eigh(hermitize(a))
        groups: list[list[int]] = [[0]]
        for k in range(1, len(vals)):
            if vals[k] - vals[groups[-1][0]] <= atol:
                groups[-1].append(k)
            else:
                groups.append([k])
        mats = [vecs[:, g] @ vecs[:, g].conj().T for g in groups]
        labels = tuple(float(vals[g[0]]) for g in groups)
        return cls(np.array(mats), labels=labels)


# ------------------------------------------------------------- operations

def born_probabilities(
    rho: ArrayLike, projectors: ProjectorSet, tol: Tolerances = DEFAULT_TOL
) -> NDArray[np.float64]:
    """Outcome probabilities Tr(P_i rho), clamped to [0, 1] after a sanity check."""
    rho = np.asarray(rho, dtype=complex)
    _require_square(rho, "density matrix")
    _require_same_dim(rho, projectors.matrices)
    p = np.einsum("ijk,...kj->...i", projectors.matrices, rho).real
    if np.any(p < -tol.trace) or np.any(p > 1 + tol.trace):
        raise QuantumStateError(f"Born probabilities out of range: {p}")
    if np.any(np.abs(p.sum(axis=-1) - 1) > tol.trace):
        raise QuantumStateError(f"Born probabilities do not sum to one: {p.sum(axis=-1)}")
    return np.clip(p, 0.0, 1.0)


def projective_collapse(rho: ArrayLike, p: ArrayLike, tol: Tolerances = DEFAULT_TOL) -> ComplexArray:
    """Post-measurement state P rho P / Tr(P rho)."""
    rho = np.asarray(rho, dtype=complex)
    p = np.asarray(p, dtype=complex)
    _require_same_dim(rho, p)
    prob = np.trace(p @ rho).real
    if prob <= tol.prob:
        raise ZeroProbabilityError(f"outcome has probability {prob:.3e}")
    return p @ rho @ p / prob


def partial_trace(rho: ArrayLike, dims: tuple[int, int], keep: int | str = 0) -> ComplexArray:
    """Reduced state of a bipartite density matrix.

    ``keep`` selects the retained subsystem: 0 or "A" for the first factor,
    1 or "B" for the second.
    """
    rho = np.asarray(rho, dtype=complex)
    d_a, d_b = dims
    d = _require_square(rho, "density matrix")
    if d_a * d_b != d:
        raise DimensionError(f"cannot factor dimension {d} as {d_a} x {d_b}")
    key = {"A": 0, "B": 1, 0: 0, 1: 1}.get(keep)
    if key is None:
        raise ValueError(f"keep must be 0/'A' or 1/'B', got {keep!r}")
    t = rho.reshape(rho.shape[:-2] + (d_a, d_b, d_a, d_b))
    if key == 0:
        return np.einsum("...ajbj->...ab", t)
    return np.einsum("...iaib->...ab", t)


def check_kraus(ops: ArrayLike, tol: Tolerances = DEFAULT_TOL) -> ComplexArray:
    ops = np.asarray(ops, dtype=complex)
    if ops.ndim != 3 or ops.shape[1] != ops.shape[2]:
        raise DimensionError(f"Kraus operators must have shape (m, d, d), got {ops.shape}")
    completeness = np.einsum("mji,mjk->ik", ops.conj(), ops)
    if np.max(np.abs(completeness - np.eye(ops.shape[1]))) > tol.idem:
        raise QuantumStateError("Kraus operators do not satisfy sum M^dag M = I")
    return ops


def kraus_apply(rho: ArrayLike, ops: ArrayLike, tol: Tolerances = DEFAULT_TOL) -> ComplexArray:
    """rho -> sum_mu M_mu rho M_mu^dag."""
    rho = np.asarray(rho, dtype=complex)
    ops = check_kraus(ops, tol)
    _require_same_dim(rho, ops)
    return np.einsum("mij,...jk,mlk->...il", ops, rho, ops.conj())


def state_overlap(rho: ArrayLike, sigma: ArrayLike) -> NDArray[np.float64]:
    """Tr(rho sigma); equals the fidelity when either argument is pure."""
    return np.einsum("...ij,...ji->...", np.asarray(rho), np.asarray(sigma)).real


def _psd_sqrt(a: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(hermitize(a))
    return (vecs * np.sqrt(np.clip(vals, 0, None))) @ vecs.conj().T


def fidelity(rho: ArrayLike, sigma: ArrayLike) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2."""
    r = _psd_sqrt(np.asarray(rho, dtype=complex))
    vals = np.linalg.eigvalsh(hermitize(r @ np.asarray(sigma, dtype=complex) @ r))
    return float(np.sum(np.sqrt(np.clip(vals, 0, None))) ** 2)

"""Declarative JSON experiment configuration.

Every block is strict: unknown keys are rejected. ``load_config`` returns a
validated :class:`ExperimentConfig` or raises :class:`ConfigError` carrying
every problem found, not just the first.
"""

from __future__ import annotations

import json
from typing import Annotated, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .ensemble import NOISY_BORN, STRATEGY_KINDS, FROZEN_BORN, WeightStrategy
from .errors import QuantumStateError
from .integrate import IntegratorParams
from .quantum import (
    IDENTITY_2,
    SIGMA_X,
    SIGMA_Z,
    ProjectorSet,
    bell_state,
    density,
    ket,
    normalize,
    plus_state,
    validate_density,
)

MODES = ("trajectory", "ensemble", "lindblad", "rabi-feedback", "bell-jzjz", "qec")

Number = Union[float, tuple[float, float]]
MatrixEntries = list[list[Number]]


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


def _complex(x: Number) -> complex:
    if isinstance(x, (tuple, list)):
        return complex(x[0], x[1])
    return complex(x)


def _matrix(entries: MatrixEntries) -> np.ndarray:
    m = np.array([[_complex(x) for x in row] for row in entries], dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise QuantumStateError(f"matrix must be square, got shape {m.shape}")
    return m


# ------------------------------------------------------------------ states

class BasisState(_Strict):
    preset: Literal["basis"]
    dim: int = Field(2, ge=2)
    index: int = Field(0, ge=0)

    def build(self) -> np.ndarray:
        if self.index >= self.dim:
            raise QuantumStateError(f"basis index {self.index} out of range for dim {self.dim}")
        return density(ket(self.index, self.dim))


class PlusState(_Strict):
    preset: Literal["plus"]

    def build(self) -> np.ndarray:
        return density(plus_state())


class BellState(_Strict):
    preset: Literal["bell"]
    kind: Literal["phi+", "phi-", "psi+", "psi-"] = "phi+"

    def build(self) -> np.ndarray:
        return density(bell_state(self.kind))


class DiagonalState(_Strict):
    preset: Literal["diagonal"]
    values: list[float]

    def build(self) -> np.ndarray:
        return np.diag(np.asarray(self.values, dtype=complex))


class KetState(_Strict):
    preset: Literal["ket"]
    amplitudes: list[Number]
    normalize: bool = True

    def build(self) -> np.ndarray:
        psi = np.array([_complex(a) for a in self.amplitudes])
        return density(normalize(psi) if self.normalize else psi)


class MatrixState(_Strict):
    preset: Literal["matrix"]
    entries: MatrixEntries

    def build(self) -> np.ndarray:
        return _matrix(self.entries)


StateSpec = Annotated[
    Union[BasisState, PlusState, BellState, DiagonalState, KetState, MatrixState],
    Field(discriminator="preset"),
]


# -------------------------------------------------------------- projectors

class ZBasis(_Strict):
    preset: Literal["z-basis"]
    dim: int = Field(2, ge=2)

    def build(self) -> ProjectorSet:
        return ProjectorSet.computational(self.dim)


class JzJz(_Strict):
    preset: Literal["jz-jz"]

    def build(self) -> ProjectorSet:
        return ProjectorSet.from_subspaces(4, [(0, 3), (1, 2)], labels=("+1", "-1"))


class LogicalError(_Strict):
    preset: Literal["logical-error"]
    dim: int = Field(8, ge=2)
    logical: list[int] = [0, 7]

    def build(self) -> ProjectorSet:
        rest = [i for i in range(self.dim) if i not in self.logical]
        return ProjectorSet.from_subspaces(self.dim, [self.logical, rest], labels=("logical", "error"))


class Subspaces(_Strict):
    preset: Literal["subspaces"]
    dim: int = Field(ge=2)
    subspaces: list[list[int]]

    def build(self) -> ProjectorSet:
        return ProjectorSet.from_subspaces(self.dim, self.subspaces)


class CustomProjectors(_Strict):
    preset: Literal["custom"]
    matrices: list[MatrixEntries]

    def build(self) -> ProjectorSet:
        return ProjectorSet(np.array([_matrix(m) for m in self.matrices]))


ProjectorSpec = Annotated[
    Union[ZBasis, JzJz, LogicalError, Subspaces, CustomProjectors], Field(discriminator="preset")
]


# ---------------------------------------------------- Hamiltonians and L_mu

class RabiX(_Strict):
    """(omega / 2) sum_k sigma_x^(k) on ``qubits`` qubits."""

    preset: Literal["rabi-x"]
    omega: float = 1.0
    qubits: int = Field(1, ge=1)

    def build(self) -> np.ndarray:
        dim = 2**self.qubits
        h = np.zeros((dim, dim), dtype=complex)
        for k in range(self.qubits):
            op = np.array([[1.0]], dtype=complex)
            for j in range(self.qubits):
                op = np.kron(op, SIGMA_X if j == k else IDENTITY_2)
            h += op
        return self.omega / 2 * h


class MatrixOperator(_Strict):
    preset: Literal["matrix"]
    entries: MatrixEntries

    def build(self) -> np.ndarray:
        return _matrix(self.entries)


HamiltonianSpec = Annotated[Union[RabiX, MatrixOperator], Field(discriminator="preset")]


class LindbladSpec(_Strict):
    """sqrt(rate) times sigma_z, each measured projector, or an explicit matrix."""

    preset: Literal["sigma-z", "projectors", "matrix"]
    rate: float = Field(1.0, ge=0)
    entries: Optional[MatrixEntries] = None

    def build(self, projectors: Optional[ProjectorSet]) -> list[np.ndarray]:
        amp = np.sqrt(self.rate)
        if self.preset == "sigma-z":
            return [amp * SIGMA_Z]
        if self.preset == "projectors":
            if projectors is None:
                raise QuantumStateError("lindblad preset 'projectors' needs a projector set")
            return [amp * p for p in projectors]
        if self.entries is None:
            raise QuantumStateError("lindblad preset 'matrix' needs entries")
        return [amp * _matrix(self.entries)]


# ------------------------------------------------------------------ blocks

class IntegratorSpec(_Strict):
    ds: float = Field(1e-3, gt=0)
    duration: float = Field(10.0, gt=0)
    renormalize_every: int = Field(10, ge=1)
    sample_every: Optional[int] = Field(None, ge=1)

    def build(self, method: str = "rk4") -> IntegratorParams:
        return IntegratorParams(
            ds=self.ds,
            duration=self.duration,
            renormalize_every=self.renormalize_every,
            sample_every=self.sample_every,
            method=method,
        )


class FeedbackSpec(_Strict):
    omega: float = Field(1.0, ge=0)
    g: float = Field(0.1, ge=0)
    epsilon: float = Field(0.05, ge=0)
    gain: float = Field(0.0, ge=0)
    duration: float = Field(10 * np.pi, gt=0)
    ds: float = Field(0.01, gt=0)
    max_shift: float = Field(0.5, ge=0)
    renormalize_every: int = Field(10, ge=1)
    actuator: Literal["joint", "individual"] = "joint"
    initial: Literal["phi+", "phi-", "psi+", "psi-"] = "phi+"


class QecSpec(_Strict):
    n_qubits: int = Field(3, ge=2, le=6)
    logical_weight: float = Field(0.7, ge=0, le=1)
    logical_amplitudes: tuple[Number, Number] = (
        float(np.cos(np.pi / 8)),
        (float(np.sin(np.pi / 8) * np.cos(np.pi / 4)), float(np.sin(np.pi / 8) * np.sin(np.pi / 4))),
    )
    error_qubit: int = Field(0, ge=0)
    duration: float = Field(10.0, gt=0)
    ds: float = Field(1e-3, gt=0)
    renormalize_every: int = Field(10, ge=1)


class OutputSpec(_Strict):
    samples: str = "samples.csv"
    summary: str = "summary.json"
    config_echo: str = "config.json"


class ExperimentConfig(_Strict):
    mode: Literal["trajectory", "ensemble", "lindblad", "rabi-feedback", "bell-jzjz", "qec"]
    initial_state: Optional[StateSpec] = None
    projectors: Optional[ProjectorSpec] = None
    projector_index: int = Field(0, ge=0)
    hamiltonian: Optional[HamiltonianSpec] = None
    lindblad: list[LindbladSpec] = []
    strategy: str = "instantaneous-born"
    epsilon: float = Field(0.0, ge=0)
    g: float = Field(1.0, ge=0)
    integrator: IntegratorSpec = IntegratorSpec()
    ensemble_size: int = Field(1000, ge=1)
    seed: Optional[int] = Field(None, ge=0, lt=2**64)
    feedback: Optional[FeedbackSpec] = None
    qec: Optional[QecSpec] = None
    output: OutputSpec = OutputSpec()

    @model_validator(mode="after")
    def _check_mode(self) -> "ExperimentConfig":
        errors = []
        mode = self.mode
        if self.strategy not in STRATEGY_KINDS:
            errors.append(f"strategy: unknown {self.strategy!r}; choose from {', '.join(STRATEGY_KINDS)}")
        if mode in ("trajectory", "ensemble", "lindblad") and self.initial_state is None:
            errors.append(f"initial_state: required in {mode} mode")
        if mode in ("trajectory", "ensemble") and self.projectors is None:
            errors.append(f"projectors: required in {mode} mode")
        if self.feedback is not None and mode not in ("rabi-feedback", "bell-jzjz"):
            errors.append(f"feedback: only valid in rabi-feedback / bell-jzjz modes, not {mode}")
        if self.qec is not None and mode != "qec":
            errors.append(f"qec: only valid in qec mode, not {mode}")
        if self.lindblad and mode != "lindblad":
            errors.append(f"lindblad: only valid in lindblad mode, not {mode}")
        if errors:
            raise ValueError("\n".join(errors))
        return self

    # ---- resolved objects

    def needs_seed(self) -> bool:
        if self.mode == "ensemble":
            return self.strategy == FROZEN_BORN or (self.strategy == NOISY_BORN and self.epsilon > 0)
        if self.mode in ("rabi-feedback", "bell-jzjz"):
            fb = self.feedback or FeedbackSpec()
            return fb.epsilon > 0
        return False

    def weight_strategy(self) -> WeightStrategy:
        return WeightStrategy(self.strategy, epsilon=self.epsilon)

    def build_state(self) -> Optional[np.ndarray]:
        return None if self.initial_state is None else self.initial_state.build()

    def build_projectors(self) -> Optional[ProjectorSet]:
        return None if self.projectors is None else self.projectors.build()

    def build_hamiltonian(self) -> Optional[np.ndarray]:
        return None if self.hamiltonian is None else self.hamiltonian.build()

    def build_lindblad(self) -> list[np.ndarray]:
        proj = self.build_projectors()
        return [op for spec in self.lindblad for op in spec.build(proj)]


def _format_pydantic(err: ValidationError) -> list[str]:
    out = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"])
        msg = e["msg"].removeprefix("Value error, ")
        for line in msg.split("\n"):
            out.append(f"{loc}: {line}" if loc else line)
    return out


def _semantic_errors(cfg: ExperimentConfig) -> list[str]:
    errors = []
    if cfg.needs_seed() and cfg.seed is None:
        errors.append(f"seed: seed required for stochastic {cfg.mode} runs")
    dims = {}
    for name, build in (
        ("initial_state", cfg.build_state),
        ("projectors", cfg.build_projectors),
        ("hamiltonian", cfg.build_hamiltonian),
        ("lindblad", cfg.build_lindblad),
    ):
        try:
            obj = build()
        except (QuantumStateError, ValueError) as exc:
            errors.append(f"{name}: {exc}")
            continue
        if obj is None or (isinstance(obj, list) and not obj):
            continue
        if name == "initial_state":
            report = validate_density(obj)
            if not report:
                errors.append(
                    f"initial_state: not a valid density matrix (hermiticity {report.hermiticity_defect:.2e}, "
                    f"trace defect {report.trace_defect:.2e}, min eigenvalue {report.min_eigenvalue:.2e})"
                )
        dims[name] = obj.dim if isinstance(obj, ProjectorSet) else np.asarray(obj).shape[-1]
    if len(set(dims.values())) > 1:
        desc = ", ".join(f"{k}={v}" for k, v in dims.items())
        errors.append(f"dimension mismatch: {desc}")
    if cfg.mode == "trajectory" and "projectors" in dims:
        n = len(cfg.build_projectors())
        if cfg.projector_index >= n:
            errors.append(f"projector_index: {cfg.projector_index} out of range for {n} projectors")
    if cfg.mode == "qec" and cfg.qec is not None and cfg.qec.error_qubit >= cfg.qec.n_qubits:
        errors.append("qec.error_qubit: out of range")
    if cfg.mode == "ensemble" and cfg.strategy == "fixed-outcome":
        errors.append("strategy: fixed-outcome is not selectable from a config (use frozen-born sampling)")
    return errors


def parse_config(text: str, seed_override: Optional[int] = None) -> ExperimentConfig:
    """Parse and fully validate a JSON config document."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"invalid JSON: {exc}"]) from None
    if not isinstance(raw, dict):
        raise ConfigError(["config must be a JSON object"])
    if seed_override is not None:
        raw["seed"] = seed_override
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> ExperimentConfig:
    try:
        cfg = ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(_format_pydantic(exc)) from None
    errors = _semantic_errors(cfg)
    if errors:
        raise ConfigError(errors)
    return cfg


def load_config(path: str, seed_override: Optional[int] = None) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), seed_override)


def echo(cfg: ExperimentConfig) -> dict:
    """Fully-defaulted, JSON-ready copy of the config."""
    return cfg.model_dump(mode="json")

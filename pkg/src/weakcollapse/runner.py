"""Execute a validated :class:`ExperimentConfig` and write its output bundle."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Union

import numpy as np

from .collapse import convergence_exponent, fixed_point_residual, integrate_trajectory
from .config import ExperimentConfig, FeedbackSpec, QecSpec, _complex, echo
from .ensemble import EnsembleStatistics, run_ensemble
from .errors import ZeroProbabilityError
from .experiments import (
    ExperimentRecord,
    QecConfig,
    RabiFeedbackConfig,
    bell_jzjz_run,
    qec_demo_run,
    rabi_feedback_run,
)
from .integrate import TrajectoryRecord
from .io import emit_samples, emit_summary, ensure_dir
from .lindblad import integrate_master
from .quantum import trace


@dataclass
class RunResult:
    config: ExperimentConfig
    record: Union[TrajectoryRecord, ExperimentRecord]
    summary: dict
    statistics: Union[EnsembleStatistics, None] = None


def _exponent(record: TrajectoryRecord, p: np.ndarray, metric: str):
    try:
        return convergence_exponent(record, p, metric=metric)
    except ValueError:
        return None


def _run_trajectory(cfg: ExperimentConfig) -> RunResult:
    rho0, projectors = cfg.build_state(), cfg.build_projectors()
    p = projectors[cfg.projector_index]
    rec = integrate_trajectory(rho0, p, cfg.build_hamiltonian(), cfg.g, cfg.integrator.build())
    # report in the full measured basis rather than {P, I - P}
    rec.projections = np.einsum("ijk,skj->si", projectors.matrices, rec.rho).real
    try:
        residual = fixed_point_residual(rec.final, p)
    except ZeroProbabilityError:
        residual = None
    summary = {
        "final_purity": float(rec.purity[-1]),
        "max_purity_drift": float(np.max(np.abs(rec.purity - rec.purity[0]))),
        "final_fixed_point_residual": residual,
        "final_distance_to_initial_fixed_point": None
        if rec.fixed_point is None
        else float(rec.distance()[-1]),
        "convergence_exponent": {
            "frobenius": _exponent(rec, p, "frobenius") if cfg.hamiltonian is None else None,
            "population": _exponent(rec, p, "population") if cfg.hamiltonian is None else None,
        },
        "final_projections": rec.projections[-1],
    }
    return RunResult(cfg, rec, summary)


def _run_ensemble(cfg: ExperimentConfig, threads: int) -> RunResult:
    rho0, projectors = cfg.build_state(), cfg.build_projectors()
    strategy = cfg.weight_strategy()
    method = "stochastic" if strategy.stochastic else "rk4"
    stats = run_ensemble(
        cfg.ensemble_size,
        rho0,
        projectors,
        strategy,
        cfg.integrator.build(method),
        seed=cfg.seed or 0,
        h=cfg.build_hamiltonian(),
        g=cfg.g,
        threads=threads,
    )
    summary = {
        "n": stats.n,
        "counts": stats.counts,
        "frequencies": stats.frequencies,
        "born_probabilities": stats.born,
        "binomial_z_scores": stats.z_scores,
        "deterministic_outcome": bool(stats.deterministic),
        "master_seed": cfg.seed,
        "trajectory_seeds": [int(x) for x in stats.seeds],
        "seed_derivation": "numpy SeedSequence(master_seed, spawn_key=(index,))",
    }
    return RunResult(cfg, stats.mean_record(projectors), summary, stats)


def _run_lindblad(cfg: ExperimentConfig) -> RunResult:
    projectors = cfg.build_projectors()
    rec = integrate_master(
        cfg.build_state(), cfg.build_hamiltonian(), cfg.build_lindblad(), cfg.integrator.build(), projectors
    )
    summary = {
        "final_purity": float(rec.purity[-1]),
        "max_trace_defect": float(np.max(np.abs(trace(rec.rho) - 1))),
        "final_rho": rec.final,
    }
    return RunResult(cfg, rec, summary)


def _feedback_config(cfg: ExperimentConfig) -> tuple[RabiFeedbackConfig, FeedbackSpec]:
    fb = cfg.feedback or FeedbackSpec()
    rcfg = RabiFeedbackConfig(
        omega=fb.omega,
        g=fb.g,
        epsilon=fb.epsilon,
        gain=fb.gain,
        duration=fb.duration,
        ds=fb.ds,
        seed=cfg.seed or 0,
        max_shift=fb.max_shift,
        renormalize_every=fb.renormalize_every,
        actuator=fb.actuator,
    )
    return rcfg, fb


def _run_feedback(cfg: ExperimentConfig) -> RunResult:
    rcfg, fb = _feedback_config(cfg)
    if cfg.mode == "rabi-feedback":
        rec = rabi_feedback_run(rcfg)
    else:
        rec = bell_jzjz_run(rcfg, initial=fb.initial)
    return RunResult(cfg, rec, {"metrics": rec.metrics})


def _run_qec(cfg: ExperimentConfig) -> RunResult:
    q = cfg.qec or QecSpec()
    qcfg = QecConfig(
        n_qubits=q.n_qubits,
        logical_weight=q.logical_weight,
        logical_amplitudes=tuple(_complex(a) for a in q.logical_amplitudes),
        error_qubit=q.error_qubit,
        duration=q.duration,
        ds=q.ds,
        renormalize_every=q.renormalize_every,
        strategy=cfg.strategy,
    )
    rec = qec_demo_run(qcfg)
    return RunResult(cfg, rec, {"metrics": rec.metrics})


def execute(cfg: ExperimentConfig, threads: int = 1) -> RunResult:
    if cfg.mode == "trajectory":
        result = _run_trajectory(cfg)
    elif cfg.mode == "ensemble":
        result = _run_ensemble(cfg, threads)
    elif cfg.mode == "lindblad":
        result = _run_lindblad(cfg)
    elif cfg.mode in ("rabi-feedback", "bell-jzjz"):
        result = _run_feedback(cfg)
    else:
        result = _run_qec(cfg)
    result.summary = {"mode": cfg.mode, "seed": cfg.seed, **result.summary, "config": echo(cfg)}
    return result


def write_outputs(result: RunResult, out_dir: str) -> dict[str, str]:
    ensure_dir(out_dir)
    out = result.config.output
    paths = {
        "samples": os.path.join(out_dir, out.samples),
        "summary": os.path.join(out_dir, out.summary),
        "config_echo": os.path.join(out_dir, out.config_echo),
    }
    emit_samples(result.record, paths["samples"])
    emit_summary(result.summary, paths["summary"])
    try:
        with open(paths["config_echo"], "w", encoding="utf-8") as fh:
            json.dump(echo(result.config), fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write config echo to {paths['config_echo']}: {exc}") from exc
    return paths


def headline_metric(result: RunResult):
    """Single number used to tabulate sweeps."""
    s = result.summary
    if "metrics" in s:
        m = s["metrics"]
        return m.get("mean_fidelity", m.get("final_logical_weight"))
    if "frequencies" in s:
        return [float(x) for x in s["frequencies"]]
    return s.get("final_purity")

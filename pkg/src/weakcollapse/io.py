"""CSV sample tables and JSON summaries.

Sample columns, in order: ``s``; the real and imaginary part of every density
matrix entry in row-major order (``rho{i}{j}_re``, ``rho{i}{j}_im``, indices
separated by ``_`` once d > 10); ``purity``; ``d{j}`` per projector; then,
when present, ``w{j}`` trajectory weights, ``feedback{k}`` applied frequency
shifts and ``fidelity``. Floats are written with 17 significant digits, which
round-trips IEEE doubles exactly.
"""

from __future__ import annotations

import csv
import json
import math
import os
from typing import Union

import numpy as np

from .experiments import ExperimentRecord
from .integrate import TrajectoryRecord


def _entry_label(i: int, j: int, d: int) -> str:
    return f"rho{i}{j}" if d <= 10 else f"rho{i}_{j}"


def sample_columns(record: Union[TrajectoryRecord, ExperimentRecord]) -> tuple[list[str], np.ndarray]:
    """Header and numeric table for a record (a single, unbatched trajectory)."""
    exp = record if isinstance(record, ExperimentRecord) else None
    traj = record.trajectory if exp is not None else record
    if traj.rho.ndim != 3:
        raise ValueError("sample tables are written for single trajectories only")
    m = len(traj.s)
    d = traj.rho.shape[-1]
    header = ["s"]
    for i in range(d):
        for j in range(d):
            lab = _entry_label(i, j, d)
            header += [f"{lab}_re", f"{lab}_im"]
    header.append("purity")
    cols = [traj.s[:, None]] if m else []
    if m:
        flat = traj.rho.reshape(m, d * d)
        cols.append(np.stack([flat.real, flat.imag], axis=-1).reshape(m, 2 * d * d))
        cols.append(traj.purity[:, None])

    def extend(prefix: str, arr) -> None:
        if arr is None:
            return
        arr = np.asarray(arr, dtype=float).reshape(m, -1) if m else np.zeros((0, np.shape(arr)[-1]))
        header.extend(f"{prefix}{k}" for k in range(arr.shape[1]))
        if m:
            cols.append(arr)

    extend("d", traj.projections)
    extend("w", traj.weights)
    if exp is not None:
        extend("feedback", exp.feedback)
        if exp.fidelity is not None:
            header.append("fidelity")
            if m:
                cols.append(np.asarray(exp.fidelity)[:, None])
    table = np.hstack(cols) if m else np.zeros((0, len(header)))
    return header, table


def emit_samples(record: Union[TrajectoryRecord, ExperimentRecord], path: str) -> str:
    header, table = sample_columns(record)
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in table:
                writer.writerow([format(float(x), ".17g") for x in row])
    except OSError as exc:
        raise OSError(f"cannot write samples to {path}: {exc}") from exc
    return path


def read_samples(path: str) -> tuple[list[str], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    table = np.array([[float(x) for x in r] for r in body]) if body else np.zeros((0, len(header)))
    return header, table


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return _jsonable(np.stack([obj.real, obj.imag], axis=-1).tolist())
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def emit_summary(summary: dict, path: str) -> str:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(_jsonable(summary), fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write summary to {path}: {exc}") from exc
    return path


def ensure_dir(path: str) -> str:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {path}: {exc}") from exc
    return path

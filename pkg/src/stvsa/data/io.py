"""Trajectory files (JSON lines) and CSV export of model-ready windows.

Record layout, version 1 (one JSON object per line, keys sorted)::

    {"schema": 1, "id": str, "label": 0 | 1 | null, "truth": 0 | 1 | null,
     "category": str | null, "rate_hz": float,
     "scenario": {"load": .., "motor_ratio": .., "fault_location": .., "clearing_time": ..},
     "P": [[bus0...], ...], "Q": [[...]], "U": [[...]],
     "provenance": {"source": "generator" | "lsgan" | "attack", "seed": int, ...}}

Floats are written with Python's shortest round-trip repr, so a write/read
cycle is exact and reruns are byte-identical.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .simulate import Trajectory

SCHEMA_VERSION = 1
TRAJ_FIELDS = ("schema", "id", "label", "truth", "category", "rate_hz", "scenario", "P", "Q", "U",
               "provenance")


def _opt_int(v):
    return None if v is None or int(v) < 0 else int(v)


def trajectory_to_record(traj: Trajectory) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "id": traj.id,
        "label": _opt_int(traj.label),
        "truth": _opt_int(traj.truth),
        "category": traj.category,
        "rate_hz": float(traj.rate_hz),
        "scenario": traj.scenario,
        "P": traj.P.tolist(),
        "Q": traj.Q.tolist(),
        "U": traj.U.tolist(),
        "provenance": traj.provenance,
    }


def record_to_trajectory(rec: dict) -> Trajectory:
    if rec.get("schema") != SCHEMA_VERSION:
        raise ValueError(f"trajectory {rec.get('id')!r}: unsupported schema {rec.get('schema')!r}")
    missing = [k for k in TRAJ_FIELDS if k not in rec]
    if missing:
        raise ValueError(f"trajectory record missing fields {missing}")
    return Trajectory(
        id=rec["id"], P=np.array(rec["P"], dtype=np.float64), Q=np.array(rec["Q"], dtype=np.float64),
        U=np.array(rec["U"], dtype=np.float64), rate_hz=rec["rate_hz"], scenario=rec["scenario"],
        label=rec["label"], truth=rec["truth"], category=rec["category"], provenance=rec["provenance"],
    )


def window_to_trajectory(window: np.ndarray, traj_id: str, label, rate_hz: float,
                         provenance: dict, scenario: dict | None = None) -> Trajectory:
    """Wrap a ``[L, 3 * n_buses]`` model window (P | Q | U) as a short trajectory record."""
    window = np.asarray(window, dtype=np.float64)
    n = window.shape[1] // 3
    return Trajectory(id=traj_id, P=window[:, :n].T.copy(), Q=window[:, n:2 * n].T.copy(),
                      U=window[:, 2 * n:].T.copy(), rate_hz=rate_hz, scenario=scenario or {},
                      label=None if label is None else int(label), provenance=dict(provenance))


def write_trajectories(trajs, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for t in trajs:
            fh.write(json.dumps(trajectory_to_record(t), sort_keys=True) + "\n")
    return path


def read_trajectories(path) -> list[Trajectory]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: bad JSON ({exc.msg})") from None
            out.append(record_to_trajectory(rec))
    return out


def window_columns(length: int, n_buses: int = 3) -> list[str]:
    chans = [f"{q}{b + 1}" for q in "PQU" for b in range(n_buses)]
    return [f"{c}_t{i}" for i in range(length) for c in chans]


def write_windows_csv(windows: np.ndarray, labels, path, ids=None) -> Path:
    """One row per window: id, label, then time-major flattened channels."""
    windows = np.asarray(windows)
    n, length, feat = windows.shape
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ids = ids if ids is not None else [f"w{i:05d}" for i in range(n)]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "label", *window_columns(length, feat // 3)])
        for i in range(n):
            w.writerow([ids[i], int(labels[i]), *map(repr, windows[i].reshape(-1).tolist())])
    return path


def read_windows_csv(path, length: int) -> tuple[np.ndarray, np.ndarray, list[str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    body = rows[1:]
    ids = [r[0] for r in body]
    labels = np.array([int(r[1]) for r in body], dtype=int)
    data = np.array([[float(v) for v in r[2:]] for r in body]).reshape(len(body), length, -1)
    return data, labels, ids

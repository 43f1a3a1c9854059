"""Voltage-band heuristic labels and the tail summary features used for clustering."""

from __future__ import annotations

import numpy as np

from .simulate import STABLE, UNSTABLE, Trajectory

UNLABELED = -1


def heuristic_label(traj: Trajectory, tail_s: float = 0.5, high: float = 0.9, low: float = 0.7) -> int:
    """Stable if every bus stays >= ``high`` over the tail, unstable if all <= ``low``."""
    tail = traj.tail(tail_s)
    if np.all(tail >= high):
        return STABLE
    if np.all(tail <= low):
        return UNSTABLE
    return UNLABELED


def heuristic_labels(trajs, tail_s: float = 0.5, high: float = 0.9, low: float = 0.7) -> np.ndarray:
    return np.array([heuristic_label(t, tail_s, high, low) for t in trajs], dtype=int)


def tail_features(traj: Trajectory, tail_s: float = 2.0) -> np.ndarray:
    """Tail mean, min, max and linear slope (p.u./s) of the bus-averaged voltage.

    Averaging over buses keeps the three level statistics from outvoting the
    slope, which is what separates slow recoveries from slow collapses.
    """
    tail = traj.tail(tail_s).mean(axis=0)
    t = np.arange(tail.size) / traj.rate_hz
    slope = np.polyfit(t, tail, 1)[0]
    return np.array([tail.mean(), tail.min(), tail.max(), slope])


def feature_matrix(trajs, tail_s: float = 2.0) -> np.ndarray:
    return np.stack([tail_features(t, tail_s) for t in trajs])


def standardize(x: np.ndarray) -> np.ndarray:
    std = x.std(axis=0)
    return (x - x.mean(axis=0)) / np.where(std > 0, std, 1.0)

"""Unbiased squared maximum mean discrepancy with a Gaussian kernel."""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist, pdist


def median_bandwidth(x: np.ndarray, y: np.ndarray) -> float:
    """Median pairwise Euclidean distance over the pooled sample."""
    d = pdist(np.concatenate([x, y]))
    med = float(np.median(d)) if d.size else 1.0
    return med if med > 0 else 1.0


def mmd_rbf(x, y, bandwidth: float | None = None) -> float:
    """U-statistic estimate of MMD^2 with ``k(a, b) = exp(-|a-b|^2 / (2 sigma^2))``.

    Symmetric in its arguments; can dip slightly below zero when the two
    samples come from the same distribution.
    """
    x = np.asarray(x, dtype=np.float64).reshape(len(x), -1)
    y = np.asarray(y, dtype=np.float64).reshape(len(y), -1)
    if len(x) < 2 or len(y) < 2:
        raise ValueError("mmd_rbf needs at least two samples per set")
    if (x.shape, x.tobytes()) > (y.shape, y.tobytes()):
        x, y = y, x  # canonical order: mmd(x, y) and mmd(y, x) run the same arithmetic
    sigma = bandwidth if bandwidth is not None else median_bandwidth(x, y)
    gamma = 1.0 / (2.0 * sigma ** 2)
    kxx = np.exp(-gamma * cdist(x, x, "sqeuclidean"))
    kyy = np.exp(-gamma * cdist(y, y, "sqeuclidean"))
    kxy = np.exp(-gamma * cdist(x, y, "sqeuclidean"))
    m, n = len(x), len(y)
    term_x = (kxx.sum() - np.trace(kxx)) / (m * (m - 1))
    term_y = (kyy.sum() - np.trace(kyy)) / (n * (n - 1))
    return float((term_x + term_y) - 2.0 * kxy.mean())

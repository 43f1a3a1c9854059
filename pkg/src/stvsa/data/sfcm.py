"""Semi-supervised fuzzy c-means with prior-knowledge memberships (fuzzifier fixed at 2)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class SfcmConfig:
    n_clusters: int = 2
    lam: float = 5.0
    max_iterations: int = 1000
    threshold: float = 1e-6
    membership_rule: str = "printed"  # printed | fcm
    centroid_rule: str = "objective"  # objective | printed

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.threshold <= 0:
            raise ValueError("threshold must be > 0")
        if self.n_clusters < 2:
            raise ValueError("n_clusters must be >= 2")
        if self.membership_rule not in ("printed", "fcm"):
            raise ValueError(f"unknown membership_rule {self.membership_rule!r}")
        if self.centroid_rule not in ("objective", "printed"):
            raise ValueError(f"unknown centroid_rule {self.centroid_rule!r}")


@dataclass
class SfcmResult:
    u: np.ndarray
    centroids: np.ndarray
    f: np.ndarray
    b: np.ndarray
    objective: list = field(default_factory=list)
    row_sums: list = field(default_factory=list)
    n_iter: int = 0
    converged: bool = False

    @property
    def labels(self) -> np.ndarray:
        return self.u.argmax(axis=1)


def priors_from_labels(labels: np.ndarray, n_clusters: int = 2) -> np.ndarray:
    """One-hot prior flags ``f`` for labels >= 0; rows of unlabeled samples (-1) stay zero."""
    labels = np.asarray(labels, dtype=int)
    f = np.zeros((labels.size, n_clusters))
    known = labels >= 0
    f[np.flatnonzero(known), labels[known]] = 1.0
    return f


def cluster_targets(f: np.ndarray) -> np.ndarray:
    """``b_j = 1`` for clusters with at least one prior-labeled member."""
    return (f.sum(axis=0) > 0).astype(np.float64)


def sq_distances(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    return ((x[:, None, :] - c[None, :, :]) ** 2).sum(axis=-1)


def fcm_memberships(d2: np.ndarray) -> np.ndarray:
    """``1 / sum_k (d_ij / d_ik)^2``; a zero distance takes full membership."""
    zero = d2 <= 0
    with np.errstate(divide="ignore"):
        inv = 1.0 / d2
    u = np.where(zero.any(axis=1, keepdims=True), 0.0, inv / np.where(np.isinf(inv), 1.0, inv).sum(axis=1, keepdims=True))
    hit = zero.any(axis=1)
    if hit.any():
        first = zero[hit].argmax(axis=1)
        u[np.flatnonzero(hit)] = 0.0
        u[np.flatnonzero(hit), first] = 1.0
    return u


def sfcm_memberships(d2: np.ndarray, f: np.ndarray, b: np.ndarray, lam: float) -> np.ndarray:
    """Prior-regularised memberships, row-renormalised.

    ``u_ij = [(1 + lam (1 - sum_k f_ik b_k)) * fcm_ij + lam f_ij b_j] / (1 + lam)``
    """
    fb = f * b[None, :]
    scale = 1.0 + lam * (1.0 - fb.sum(axis=1, keepdims=True))
    u = (scale * fcm_memberships(d2) + lam * fb) / (1.0 + lam)
    u = np.clip(u, 0.0, None)
    return u / u.sum(axis=1, keepdims=True)


def objective(x: np.ndarray, u: np.ndarray, c: np.ndarray, f: np.ndarray, b: np.ndarray,
              lam: float) -> float:
    d2 = sq_distances(x, c)
    return float((u ** 2 * d2).sum() + lam * ((u - f * b[None, :]) ** 2 * d2).sum())


def _init_centroids(x, f, n_clusters, rng):
    counts = f.sum(axis=0)
    c = np.empty((n_clusters, x.shape[1]))
    free = rng.choice(len(x), size=n_clusters, replace=False)
    for j in range(n_clusters):
        c[j] = (f[:, j] @ x) / counts[j] if counts[j] > 0 else x[free[j]]
    return c


def sfcm_fit(x: np.ndarray, f: np.ndarray | None = None, cfg: SfcmConfig | None = None,
             seed: int = 0, init: np.ndarray | None = None) -> SfcmResult:
    """Alternate membership and centroid updates until the centroids stop moving.

    ``f`` is ``[N, n_clusters]`` binary prior flags (all-zero rows for unlabeled
    samples). With ``lam == 0`` or no priors this is plain FCM with exponent 2.
    """
    cfg = cfg or SfcmConfig()
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("sfcm_fit: features must be finite")
    n, m = len(x), cfg.n_clusters
    f = np.zeros((n, m)) if f is None else np.asarray(f, dtype=np.float64)
    if f.shape != (n, m):
        raise ValueError(f"prior flags shape {f.shape} != {(n, m)}")
    b = cluster_targets(f)
    lam = cfg.lam
    fb = f * b[None, :]
    c = np.array(init, dtype=np.float64) if init is not None else _init_centroids(
        x, f, m, np.random.default_rng(seed))
    res = SfcmResult(u=np.full((n, m), 1.0 / m), centroids=c, f=f, b=b)
    for it in range(1, cfg.max_iterations + 1):
        d2 = sq_distances(x, c)
        if cfg.membership_rule == "printed":
            u = sfcm_memberships(d2, f, b, lam)
        else:
            u = fcm_memberships(d2)
        res.row_sums.append(float(np.abs(u.sum(axis=1) - 1).max()))
        res.objective.append(objective(x, u, c, f, b, lam))
        if cfg.centroid_rule == "objective":
            w = u ** 2 + lam * (u - fb) ** 2
        else:
            w = u ** 2
        c_new = (w.T @ x) / np.maximum(w.sum(axis=0)[:, None], 1e-300)
        shift = float(np.abs(c_new - c).max())
        c = c_new
        res.objective.append(objective(x, u, c, f, b, lam))
        res.u, res.centroids, res.n_iter = u, c, it
        if shift < cfg.threshold:
            res.converged = True
            break
    return res


def fcm_reference(x: np.ndarray, n_clusters: int = 2, iters: int = 300, seed: int = 0,
                  init: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Textbook FCM (m=2), kept separate from ``sfcm_fit`` as a cross-check."""
    rng = np.random.default_rng(seed)
    c = np.array(init, dtype=np.float64) if init is not None else x[rng.choice(len(x), n_clusters, replace=False)]
    for _ in range(iters):
        dist = np.linalg.norm(x[:, None] - c[None], axis=2) + 1e-12
        u = 1.0 / ((dist[:, :, None] / dist[:, None, :]) ** 2).sum(axis=2)
        c = (u.T ** 2 @ x) / (u.T ** 2).sum(axis=1, keepdims=True)
    return u, c

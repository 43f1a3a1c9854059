"""Binary classification metrics with the unstable class (1) as positive."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import rankdata


@dataclass
class Metrics:
    accuracy: float
    f1: float
    auc: float | None
    tp: int
    fp: int
    tn: int
    fn: int
    loss_trace: list = field(default_factory=list)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("loss_trace")
        return d


def confusion(y_true, y_pred) -> tuple[int, int, int, int]:
    y_true = np.asarray(y_true).astype(int)
    y_pred = np.asarray(y_pred).astype(int)
    tp = int(np.sum((y_pred == 1) & (y_true == 1)))
    fp = int(np.sum((y_pred == 1) & (y_true == 0)))
    tn = int(np.sum((y_pred == 0) & (y_true == 0)))
    fn = int(np.sum((y_pred == 0) & (y_true == 1)))
    return tp, fp, tn, fn


def f1_from_counts(tp: int, fp: int, fn: int) -> float:
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def auc_rank(y_true, scores) -> float | None:
    """Mann-Whitney AUC with midranks for ties; ``None`` when only one class is present."""
    y_true = np.asarray(y_true).astype(int)
    scores = np.asarray(scores, dtype=np.float64)
    n_pos = int(np.sum(y_true == 1))
    n_neg = int(np.sum(y_true == 0))
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(scores)  # average method = midranks
    u = ranks[y_true == 1].sum() - n_pos * (n_pos + 1) / 2
    return float(u / (n_pos * n_neg))


def auc_trapezoid(y_true, scores) -> float | None:
    """ROC area by sweeping every distinct threshold; the cross-check for :func:`auc_rank`."""
    y_true = np.asarray(y_true).astype(int)
    scores = np.asarray(scores, dtype=np.float64)
    n_pos = int(np.sum(y_true == 1))
    n_neg = int(np.sum(y_true == 0))
    if n_pos == 0 or n_neg == 0:
        return None
    thresholds = np.concatenate([[np.inf], np.unique(scores)[::-1]])
    tpr = np.array([np.sum((scores >= t) & (y_true == 1)) for t in thresholds]) / n_pos
    fpr = np.array([np.sum((scores >= t) & (y_true == 0)) for t in thresholds]) / n_neg
    return float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1]) / 2))


def metrics_from_scores(y_true, prob_pos, y_pred=None) -> Metrics:
    y_true = np.asarray(y_true).astype(int)
    prob_pos = np.asarray(prob_pos, dtype=np.float64)
    if y_pred is None:
        y_pred = (prob_pos > 0.5).astype(int)
    tp, fp, tn, fn = confusion(y_true, y_pred)
    total = tp + fp + tn + fn
    return Metrics(
        accuracy=(tp + tn) / total if total else 0.0,
        f1=f1_from_counts(tp, fp, fn),
        auc=auc_rank(y_true, prob_pos),
        tp=tp, fp=fp, tn=tn, fn=fn,
    )


def evaluate(model, x, y, batch_size: int = 256) -> Metrics:
    """Accuracy from argmax, F1 and rank AUC over the class-1 probability."""
    proba = model.predict_proba(x, batch_size)
    return metrics_from_scores(y, proba[:, 1], proba.argmax(axis=1))

"""Minibatch AdamW training with cosine decay, clipping and per-epoch test metrics."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from ..autodiff import AdamW, clip_grad_norm, cosine_lr, ops
from .metrics import Metrics, evaluate

log = logging.getLogger(__name__)


class TrainingDiverged(FloatingPointError):
    def __init__(self, epoch: int, detail: str = "loss is NaN"):
        super().__init__(f"training diverged at epoch {epoch}: {detail}")
        self.epoch = epoch


@dataclass
class TrainConfig:
    epochs: int = 55
    batch_size: int = 32
    lr_max: float = 1e-4
    lr_min: float = 1e-5
    weight_decay: float = 0.01
    clip_norm: float = 1.0
    eval_every: int = 1

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Dataset:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=int)
        if len(self.x) != len(self.y):
            raise ValueError(f"dataset has {len(self.x)} windows but {len(self.y)} labels")

    def __len__(self) -> int:
        return len(self.y)

    def subset(self, idx) -> "Dataset":
        return Dataset(self.x[idx], self.y[idx])

    @staticmethod
    def concat(parts) -> "Dataset":
        parts = list(parts)
        return Dataset(np.concatenate([p.x for p in parts]), np.concatenate([p.y for p in parts]))


@dataclass
class TrainResult:
    model: object
    loss_trace: list = field(default_factory=list)
    test_trace: list = field(default_factory=list)
    metrics: Metrics | None = None
    seconds: float = 0.0


def stratified_split(y, test_fraction: float = 0.2, rng: np.random.Generator | None = None):
    """Index arrays ``(train, test)`` with each class split in the same proportion."""
    y = np.asarray(y)
    rng = rng or np.random.default_rng(0)
    train, test = [], []
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(idx.size)]
        n_test = int(round(test_fraction * idx.size))
        test.append(idx[:n_test])
        train.append(idx[n_test:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def batch_loss(model, x, y):
    return ops.cross_entropy(model.logits(x), y)


def train(model, data: Dataset, cfg: TrainConfig | None = None, test: Dataset | None = None,
          rng: np.random.Generator | None = None, fit_scaler: bool = True,
          batch_hook=None) -> TrainResult:
    """Train in place and return per-epoch mean loss plus test metrics.

    ``batch_hook(model, xb, yb, rng)`` may replace a batch before the step
    (adversarial training uses it). ``fit_scaler`` recomputes the model's
    input standardisation from ``data`` first.
    """
    cfg = cfg or TrainConfig()
    rng = rng or np.random.default_rng(0)
    if len(data) == 0:
        raise ValueError("train: empty dataset")
    if fit_scaler:
        model.fit_scaler(data.x)
    params = model.parameters()
    opt = AdamW(params, lr=cfg.lr_max, weight_decay=cfg.weight_decay)
    n_batches = int(np.ceil(len(data) / cfg.batch_size))
    total = max(cfg.epochs * n_batches, 1)
    res = TrainResult(model=model)
    start = time.perf_counter()
    step = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(data))
        losses = []
        for b in range(n_batches):
            idx = order[b * cfg.batch_size:(b + 1) * cfg.batch_size]
            xb, yb = data.x[idx], data.y[idx]
            if batch_hook is not None:
                xb, yb = batch_hook(model, xb, yb, rng)
            opt.lr = cosine_lr(step, total, cfg.lr_max, cfg.lr_min)
            opt.zero_grad()
            loss = batch_loss(model, xb, yb)
            if not np.isfinite(loss.data):
                raise TrainingDiverged(epoch)
            loss.backward()
            clip_grad_norm(params, cfg.clip_norm)
            opt.step()
            losses.append(float(loss.data) * len(idx))
            step += 1
        res.loss_trace.append(sum(losses) / len(data))
        if test is not None and ((epoch + 1) % cfg.eval_every == 0 or epoch == cfg.epochs - 1):
            m = evaluate(model, test.x, test.y)
            res.test_trace.append(m.to_dict())
        log.debug("epoch %d loss %.5f", epoch, res.loss_trace[-1])
    if test is not None:
        res.metrics = evaluate(model, test.x, test.y)
        res.metrics.loss_trace = list(res.loss_trace)
    res.seconds = time.perf_counter() - start
    return res

"""White-box evasion attacks on voltage-magnitude channels: MI-FGSM, PGD and C&W.

All attacks work on batches ``[B, L, F]`` and only move the channels selected
by ``AttackConfig.channels`` (default: the U block, the last third of the
feature axis). Model parameters are frozen for the duration of an attack.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..autodiff import Tensor, ops
from ..models.networks import frozen

METHODS = ("mifgsm", "pgd", "cw")
U_RANGE = (0.0, 1.5)


def voltage_channels(feature_dim: int) -> tuple[int, ...]:
    """Indices of the U block in the P | Q | U feature layout."""
    if feature_dim % 3:
        raise ValueError(f"feature_dim {feature_dim} is not a P/Q/U layout")
    n = feature_dim // 3
    return tuple(range(2 * n, 3 * n))


@dataclass
class AttackConfig:
    method: str = "pgd"
    epsilon: float | None = 0.03  # l_inf (mifgsm, pgd) or l_2 (cw); None = unbounded cw
    steps: int = 10
    step_size: float | None = None  # default eps/steps (mifgsm), eps/4 (pgd)
    momentum: float = 1.0
    random_start: bool = True
    confidence: float = 2.0
    lr: float = 0.05
    max_iterations: int = 100
    tradeoff: float = 1.0
    channels: tuple | None = None  # None = voltage channels
    clamp_range: tuple = U_RANGE

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown attack method {self.method!r}; expected one of {METHODS}")
        if self.epsilon is not None and self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.epsilon is None and self.method != "cw":
            raise ValueError(f"{self.method} needs a finite epsilon")
        if self.steps < 1 and self.method != "cw":
            raise ValueError("steps must be >= 1")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        if self.channels is not None:
            self.channels = tuple(int(c) for c in self.channels)

    @property
    def alpha(self) -> float:
        if self.step_size is not None:
            return self.step_size
        if self.method == "pgd":
            return self.epsilon / 4
        return self.epsilon / self.steps

    def mask(self, feature_dim: int) -> np.ndarray:
        chans = self.channels if self.channels is not None else voltage_channels(feature_dim)
        m = np.zeros(feature_dim, dtype=bool)
        m[list(chans)] = True
        return m

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class AdvExample:
    x_clean: np.ndarray
    x_adv: np.ndarray
    label: int
    linf: float
    l2: float
    success: bool


@dataclass
class AdvBatch:
    x_clean: np.ndarray
    x_adv: np.ndarray
    y: np.ndarray
    pred: np.ndarray
    method: str
    epsilon: float | None
    meta: dict = field(default_factory=dict)

    @property
    def delta(self) -> np.ndarray:
        return self.x_adv - self.x_clean

    @property
    def linf(self) -> np.ndarray:
        return np.abs(self.delta).reshape(len(self.y), -1).max(axis=1, initial=0.0)

    @property
    def l2(self) -> np.ndarray:
        return np.sqrt((self.delta ** 2).reshape(len(self.y), -1).sum(axis=1))

    @property
    def success(self) -> np.ndarray:
        return self.pred != self.y

    @property
    def accuracy(self) -> float:
        return float(np.mean(self.pred == self.y)) if len(self.y) else 0.0

    def examples(self):
        for i in range(len(self.y)):
            yield AdvExample(self.x_clean[i], self.x_adv[i], int(self.y[i]), float(self.linf[i]),
                             float(self.l2[i]), bool(self.success[i]))


def input_gradient(model, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``d CE(model(x), y) / dx`` (batch-mean loss, so scaled by 1/B)."""
    xt = Tensor(x, requires_grad=True)
    loss = ops.cross_entropy(model.logits(xt), y)
    loss.backward()
    return xt.grad if xt.grad is not None else np.zeros_like(x)


def _clamp(x: np.ndarray, mask: np.ndarray, lo_hi: tuple) -> np.ndarray:
    out = x.copy()
    out[..., mask] = np.clip(out[..., mask], *lo_hi)
    return out


def _predict(model, x: np.ndarray) -> np.ndarray:
    return model.logits(Tensor(x)).data.argmax(axis=1)


def _project_linf(x_adv, x0, eps, mask, lo_hi):
    delta = np.clip(x_adv - x0, -eps, eps)
    delta[..., ~mask] = 0.0
    return _clamp(x0 + delta, mask, lo_hi)


def mi_fgsm(model, x, y, cfg: AttackConfig) -> AdvBatch:
    """Momentum iterative FGSM: ``g <- mu g + grad / |grad|_1``; ``x <- clip(x + a sign(g))``."""
    x0 = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=int)
    mask = cfg.mask(x0.shape[-1])
    x_adv = x0.copy()
    with frozen(model):
        if cfg.epsilon > 0:
            g = np.zeros_like(x0)
            for _ in range(cfg.steps):
                grad = input_gradient(model, x_adv, y)
                grad[..., ~mask] = 0.0
                l1 = np.abs(grad).reshape(len(y), -1).sum(axis=1).reshape(-1, 1, 1)
                g = cfg.momentum * g + np.divide(grad, l1, out=np.zeros_like(grad), where=l1 > 0)
                x_adv = _project_linf(x_adv + cfg.alpha * np.sign(g), x0, cfg.epsilon, mask, cfg.clamp_range)
        pred = _predict(model, x_adv)
    return AdvBatch(x0, x_adv, y, pred, "mifgsm", cfg.epsilon)


def pgd(model, x, y, cfg: AttackConfig, rng: np.random.Generator | None = None) -> AdvBatch:
    """l_inf PGD with optional uniform random start inside the ball."""
    x0 = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=int)
    mask = cfg.mask(x0.shape[-1])
    rng = rng or np.random.default_rng(0)
    x_adv = x0.copy()
    losses = []
    with frozen(model):
        if cfg.epsilon > 0:
            if cfg.random_start:
                noise = rng.uniform(-cfg.epsilon, cfg.epsilon, size=x0.shape)
                x_adv = _project_linf(x0 + noise, x0, cfg.epsilon, mask, cfg.clamp_range)
            for _ in range(cfg.steps):
                grad = input_gradient(model, x_adv, y)
                grad[..., ~mask] = 0.0
                x_adv = _project_linf(x_adv + cfg.alpha * np.sign(grad), x0, cfg.epsilon, mask, cfg.clamp_range)
                losses.append(float(ops.cross_entropy(model.logits(Tensor(x_adv)), y).data))
        pred = _predict(model, x_adv)
    return AdvBatch(x0, x_adv, y, pred, "pgd", cfg.epsilon, {"loss_trace": losses})


def cw_margin(logits: Tensor, y: np.ndarray, confidence: float) -> Tensor:
    """Per-sample ``max(Z_y - max_{j != y} Z_j, -c)``."""
    b, c = logits.shape
    onehot = np.zeros((b, c))
    onehot[np.arange(b), y] = 1.0
    z_true = ops.sum(logits * onehot, axis=1)
    z_other = ops.max(logits - onehot * 1e9, axis=1)
    return ops.maximum(z_true - z_other, -confidence)


def cw_attack(model, x, y, cfg: AttackConfig) -> AdvBatch:
    """Carlini-Wagner l_2: Adam on ``|d|^2 + lambda * margin``; keeps the smallest successful iterate."""
    x0 = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=int)
    mask = cfg.mask(x0.shape[-1])
    b = len(y)
    delta = np.zeros_like(x0)
    m = np.zeros_like(x0)
    v = np.zeros_like(x0)
    beta1, beta2, eps_adam = 0.9, 0.999, 1e-8
    with frozen(model):
        best = x0.copy()
        best_norm = np.full(b, np.inf)
        pred0 = _predict(model, x0)
        hit = pred0 != y
        best_norm[hit] = 0.0
        for it in range(1, cfg.max_iterations + 1):
            dt = Tensor(delta, requires_grad=True)
            x_adv_t = dt + x0
            logits = model.logits(x_adv_t)
            norm2 = ops.sum(ops.reshape(dt * dt, (b, -1)), axis=1)
            loss = ops.sum(norm2 + cw_margin(logits, y, cfg.confidence) * cfg.tradeoff)
            loss.backward()
            grad = dt.grad
            grad[..., ~mask] = 0.0
            m = beta1 * m + (1 - beta1) * grad
            v = beta2 * v + (1 - beta2) * grad * grad
            step = cfg.lr * (m / (1 - beta1 ** it)) / (np.sqrt(v / (1 - beta2 ** it)) + eps_adam)
            delta = delta - step
            delta[..., ~mask] = 0.0
            if cfg.epsilon is not None:
                n = np.sqrt((delta ** 2).reshape(b, -1).sum(axis=1))
                scale = np.where(n > cfg.epsilon, cfg.epsilon / np.maximum(n, 1e-300), 1.0)
                delta = delta * scale.reshape(-1, 1, 1)
            x_adv = _clamp(x0 + delta, mask, cfg.clamp_range)
            delta = x_adv - x0
            pred = _predict(model, x_adv)
            norms = np.sqrt((delta ** 2).reshape(b, -1).sum(axis=1))
            better = (pred != y) & (norms < best_norm)
            best[better] = x_adv[better]
            best_norm[better] = norms[better]
        last = _clamp(x0 + delta, mask, cfg.clamp_range)
        found = np.isfinite(best_norm)
        x_out = np.where(found.reshape(-1, 1, 1), best, last)
        pred = _predict(model, x_out)
    return AdvBatch(x0, x_out, y, pred, "cw", cfg.epsilon)


def run_attack(model, x, y, cfg: AttackConfig, rng: np.random.Generator | None = None,
               batch_size: int = 256) -> AdvBatch:
    """Dispatch on ``cfg.method`` in chunks of ``batch_size``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=int)
    rng = rng or np.random.default_rng(0)
    parts = []
    for i in range(0, len(y), batch_size):
        xb, yb = x[i:i + batch_size], y[i:i + batch_size]
        if cfg.method == "mifgsm":
            parts.append(mi_fgsm(model, xb, yb, cfg))
        elif cfg.method == "pgd":
            parts.append(pgd(model, xb, yb, cfg, rng))
        else:
            parts.append(cw_attack(model, xb, yb, cfg))
    if not parts:
        empty = np.zeros((0, *x.shape[1:]))
        return AdvBatch(empty, empty, y, y.copy(), cfg.method, cfg.epsilon)
    return AdvBatch(
        np.concatenate([p.x_clean for p in parts]), np.concatenate([p.x_adv for p in parts]),
        y, np.concatenate([p.pred for p in parts]), cfg.method, cfg.epsilon,
    )

"""Threat models, gray-box transfer, adversarial training and robustness grids."""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field

import numpy as np

from ..autodiff import AdamW, clip_grad_norm, cosine_lr, ops
from ..models.networks import ModelConfig, baseline, frozen
from .attacks import AdvBatch, AttackConfig, run_attack

THREATS = ("white_box", "gray_box")


@dataclass
class Surrogate:
    """A classical stand-in fitted only on (input, target probability) query pairs."""

    model: object
    trained: bool = False
    queries: int = 0
    loss_trace: list = field(default_factory=list)


@dataclass
class ThreatModel:
    kind: str = "white_box"
    surrogate: Surrogate | None = None

    def __post_init__(self):
        if self.kind not in THREATS:
            raise ValueError(f"unknown threat model {self.kind!r}; expected one of {THREATS}")
        if self.kind == "gray_box" and self.surrogate is None:
            raise ValueError("gray_box threat needs a surrogate model")

    def attack_model(self, target):
        if self.kind == "white_box":
            return target
        if self.surrogate.model is target:
            raise ValueError("gray_box surrogate must be distinct from the target")
        if not self.surrogate.trained:
            raise ValueError("gray_box surrogate has not been trained")
        return self.surrogate.model


def train_surrogate(target, x_query: np.ndarray, epochs: int = 20, max_queries: int = 2000,
                    config: ModelConfig | None = None, seed: int = 0, batch_size: int = 32,
                    lr: float = 1e-3) -> Surrogate:
    """Distil a Transformer baseline on the target's output probabilities (soft labels)."""
    x_query = np.asarray(x_query, dtype=np.float64)[:max_queries]
    if len(x_query) == 0:
        raise ValueError("train_surrogate: no query inputs")
    soft = target.predict_proba(x_query)
    cfg = config or getattr(target, "config", ModelConfig())
    rng = np.random.default_rng(seed)
    model = baseline("transformer", cfg, rng)
    model.fit_scaler(x_query)
    params = model.parameters()
    opt = AdamW(params, lr=lr)
    n_batches = int(np.ceil(len(x_query) / batch_size))
    total = epochs * n_batches
    sur = Surrogate(model, queries=len(x_query))
    step = 0
    for _ in range(epochs):
        order = rng.permutation(len(x_query))
        running = 0.0
        for b in range(n_batches):
            idx = order[b * batch_size:(b + 1) * batch_size]
            opt.lr = cosine_lr(step, total, lr, lr / 10)
            opt.zero_grad()
            loss = ops.soft_cross_entropy(model.logits(x_query[idx]), soft[idx])
            loss.backward()
            clip_grad_norm(params, 1.0)
            opt.step()
            running += float(loss.data) * len(idx)
            step += 1
        sur.loss_trace.append(running / len(x_query))
    sur.trained = True
    return sur


def gray_box_attack(target, surrogate: Surrogate, x, y, cfg: AttackConfig,
                    rng: np.random.Generator | None = None) -> AdvBatch:
    """Craft on the surrogate, then score the transferred inputs on the target."""
    crafted = run_attack(ThreatModel("gray_box", surrogate).attack_model(target), x, y, cfg, rng)
    pred = target.predict(crafted.x_adv)
    return AdvBatch(crafted.x_clean, crafted.x_adv, crafted.y, pred, cfg.method, cfg.epsilon,
                    {"threat": "gray_box", "surrogate_success": float(np.mean(crafted.success))})


def attack(target, x, y, cfg: AttackConfig, threat: ThreatModel | None = None,
           rng: np.random.Generator | None = None) -> AdvBatch:
    threat = threat or ThreatModel()
    if threat.kind == "white_box":
        return run_attack(target, x, y, cfg, rng)
    return gray_box_attack(target, threat.surrogate, x, y, cfg, rng)


def weight_checksum(model) -> str:
    h = hashlib.sha256()
    for name, p in model.named_parameters():
        h.update(name.encode())
        h.update(np.ascontiguousarray(p.data).tobytes())
    return h.hexdigest()


def default_training_attacks(epsilon: float = 0.03) -> list[AttackConfig]:
    return [AttackConfig("pgd", epsilon), AttackConfig("mifgsm", epsilon)]


def adversarial_training(model, data, attack_cfgs=None, mix_ratio: float = 0.5, epochs: int = 5,
                         train_cfg=None, test=None, seed: int = 0):
    """Continue training ``model`` with a share of every batch replaced by fresh attacks.

    Attack configs are cycled batch by batch; adversarial inputs are crafted
    white-box against the current weights. Returns the harness ``TrainResult``.
    """
    from ..harness.training import TrainConfig, train

    if not 0.0 <= mix_ratio <= 1.0:
        raise ValueError("mix_ratio must lie in [0, 1]")
    if len(data) == 0:
        raise ValueError("adversarial_training: empty dataset")
    attack_cfgs = list(attack_cfgs) if attack_cfgs else default_training_attacks()
    cycle = itertools.cycle(attack_cfgs)
    base = train_cfg or TrainConfig()
    cfg = TrainConfig(**{**base.to_dict(), "epochs": epochs})

    def hook(m, xb, yb, rng):
        n_adv = int(round(mix_ratio * len(yb)))
        if n_adv == 0:
            return xb, yb
        pick = rng.permutation(len(yb))[:n_adv]
        adv = run_attack(m, xb[pick], yb[pick], next(cycle), rng)
        xb = xb.copy()
        xb[pick] = adv.x_adv
        return xb, yb

    return train(model, data, cfg, test=test, rng=np.random.default_rng(seed), fit_scaler=False,
                 batch_hook=hook)


@dataclass
class RobustnessReport:
    clean_accuracy: float
    rows: list = field(default_factory=list)
    batches: dict = field(default_factory=dict)  # (method, threat, eps) -> AdvBatch when kept

    @property
    def mean_robust_accuracy(self) -> float:
        vals = [r["accuracy"] for r in self.rows if r["epsilon"] != 0]
        return float(np.mean(vals)) if vals else self.clean_accuracy

    @property
    def robustness_drop(self) -> float:
        return self.clean_accuracy - self.mean_robust_accuracy

    def cell(self, method: str, threat: str, epsilon) -> dict:
        for r in self.rows:
            if r["method"] == method and r["threat"] == threat and r["epsilon"] == epsilon:
                return r
        raise KeyError((method, threat, epsilon))


def robustness_eval(model, x, y, methods=("mifgsm", "pgd", "cw"), threats=("white_box",),
                    epsilons=(0.01, 0.03, 0.05), surrogate: Surrogate | None = None, seed: int = 0,
                    overrides: dict | None = None, keep: bool = False) -> RobustnessReport:
    """Accuracy for every (method, threat, epsilon) cell plus clean accuracy.

    With ``keep`` the adversarial batches are retained in ``report.batches``.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=int)
    with frozen(model):
        clean = float(np.mean(model.predict(x) == y)) if len(y) else 0.0
    report = RobustnessReport(clean)
    for method, threat, eps in itertools.product(methods, threats, epsilons):
        tm = ThreatModel(threat, surrogate if threat == "gray_box" else None)
        cfg = AttackConfig(method, eps, **(overrides or {}).get(method, {}))
        rng = np.random.default_rng(seed)
        batch = attack(model, x, y, cfg, tm, rng)
        if keep:
            report.batches[(method, threat, eps)] = batch
        report.rows.append({
            "method": method, "threat": threat, "epsilon": eps, "n": int(len(y)),
            "accuracy": batch.accuracy, "success_rate": float(np.mean(batch.success)) if len(y) else 0.0,
            "mean_linf": float(batch.linf.mean()) if len(y) else 0.0,
            "mean_l2": float(batch.l2.mean()) if len(y) else 0.0,
        })
    return report

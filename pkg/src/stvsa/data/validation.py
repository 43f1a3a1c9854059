"""Functional checks on generated windows: Train/Test on Real/Synthetic regimes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

REGIMES = ("RR", "TSTR", "TRTS")
METRIC_KEYS = ("accuracy", "auc", "f1")


@dataclass
class TstrResult:
    metrics: dict = field(default_factory=dict)  # regime -> {accuracy, auc, f1}

    @property
    def deltas(self) -> dict:
        """``|regime - RR|`` per metric for TSTR and TRTS."""
        rr = self.metrics["RR"]
        out = {}
        for regime in ("TSTR", "TRTS"):
            out[regime] = {}
            for k in METRIC_KEYS:
                a, b = self.metrics[regime][k], rr[k]
                out[regime][k] = None if a is None or b is None else abs(a - b)
        return out

    @property
    def max_delta(self) -> float:
        vals = [v for d in self.deltas.values() for v in d.values() if v is not None]
        return max(vals) if vals else 0.0

    def rows(self) -> list[dict]:
        d = self.deltas
        rows = []
        for regime in REGIMES:
            row = {"regime": regime, **{k: self.metrics[regime][k] for k in METRIC_KEYS}}
            for k in METRIC_KEYS:
                row[f"delta_{k}"] = 0.0 if regime == "RR" else d[regime][k]
            rows.append(row)
        return rows


def _check(y, name):
    if len(np.unique(y)) < 2:
        raise ValueError(f"tstr_trts_eval: {name} set has a single class")


def tstr_trts_eval(real_train, real_test, synthetic, model_config=None, train_config=None,
                   seed: int = 0, variant: str = "transformer") -> TstrResult:
    """Train the classical baseline on real and on synthetic data with identical
    config and seed, and score it three ways.

    RR trains on ``real_train`` and tests on ``real_test``; TSTR trains on
    ``real_train`` and tests on ``synthetic``; TRTS trains on ``synthetic`` and
    tests on ``real_test``. All arguments are harness ``Dataset`` objects.
    """
    from ..harness.metrics import evaluate
    from ..harness.training import TrainConfig, train
    from ..models.networks import ModelConfig, baseline

    for name, ds in (("real_train", real_train), ("real_test", real_test), ("synthetic", synthetic)):
        _check(ds.y, name)
    mcfg = model_config or ModelConfig(seq_len=real_train.x.shape[1], feature_dim=real_train.x.shape[2])
    tcfg = train_config or TrainConfig(epochs=15)

    def fit(ds):
        model = baseline(variant, mcfg, np.random.default_rng(seed))
        train(model, ds, tcfg, rng=np.random.default_rng(seed + 1))
        return model

    on_real = fit(real_train)
    on_syn = on_real if synthetic is real_train else fit(synthetic)
    res = TstrResult()
    for regime, model, ds in (("RR", on_real, real_test), ("TSTR", on_real, synthetic),
                              ("TRTS", on_syn, real_test)):
        m = evaluate(model, ds.x, ds.y)
        res.metrics[regime] = {"accuracy": m.accuracy, "auc": m.auc, "f1": m.f1}
    return res

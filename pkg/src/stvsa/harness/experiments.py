"""Dataset pipeline and the experiment drivers: model comparison, sweeps and ablation."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..adversarial.attacks import AttackConfig
from ..adversarial.defense import adversarial_training, robustness_eval
from ..data.augment import Augmenter, augmentation_counts, fit_augmenter
from ..data.labeling import UNLABELED, feature_matrix, heuristic_labels, standardize
from ..data.lsgan import LsganConfig
from ..data.mmd import mmd_rbf
from ..data.sfcm import SfcmConfig, priors_from_labels, sfcm_fit
from ..data.simulate import GeneratorConfig, ScenarioGrid, simulate_trajectories
from ..models.networks import ModelConfig, build_model
from ..rng import stage_seed
from .metrics import evaluate
from .training import Dataset, TrainConfig, stratified_split, train

log = logging.getLogger(__name__)

LABELINGS = ("sfcm", "heuristic", "truth")


@dataclass
class DatasetConfig:
    n_per_cell: int = 17
    window_s: float = 0.1
    test_fraction: float = 0.2
    labeling: str = "sfcm"
    augment: bool = True
    expansion: float = 10000 / 2040
    n_components: int = 24
    heuristic_tail_s: float = 0.5
    feature_tail_s: float = 2.0
    sfcm: SfcmConfig = field(default_factory=SfcmConfig)
    gan: LsganConfig = field(default_factory=LsganConfig)
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    grid: ScenarioGrid = field(default_factory=ScenarioGrid)

    def __post_init__(self):
        if self.labeling not in LABELINGS:
            raise ValueError(f"unknown labeling {self.labeling!r}; expected one of {LABELINGS}")
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must lie in (0, 1)")

    @property
    def window_length(self) -> int:
        return int(round(self.window_s * self.generator.rate_hz))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class LabeledPool:
    """Simulated trajectories with every labeling computed once."""

    trajectories: list
    truth: np.ndarray
    heuristic: np.ndarray
    sfcm: np.ndarray
    sfcm_result: object = None

    def labels(self, kind: str) -> np.ndarray:
        return {"truth": self.truth, "heuristic": self.heuristic, "sfcm": self.sfcm}[kind]

    def summary(self) -> dict:
        h = self.heuristic
        return {
            "n": int(len(self.truth)),
            "heuristic_stable": int(np.sum(h == 0)), "heuristic_unstable": int(np.sum(h == 1)),
            "heuristic_unlabeled": int(np.sum(h == UNLABELED)),
            "sfcm_stable": int(np.sum(self.sfcm == 0)), "sfcm_unstable": int(np.sum(self.sfcm == 1)),
            "sfcm_accuracy_vs_truth": float(np.mean(self.sfcm == self.truth)),
            "heuristic_accuracy_on_labeled": float(np.mean(self.truth[h >= 0] == h[h >= 0]))
            if np.any(h >= 0) else None,
        }


@dataclass
class Bundle:
    train: Dataset
    test: Dataset
    config: DatasetConfig
    n_real_train: int = 0
    augmenter: Augmenter | None = None
    synthetic: Dataset | None = None
    info: dict = field(default_factory=dict)

    @property
    def real_train(self) -> Dataset:
        return self.train.subset(np.arange(self.n_real_train))


def label_pool(trajs, cfg: DatasetConfig | None = None, seed: int = 0) -> LabeledPool:
    cfg = cfg or DatasetConfig()
    heur = heuristic_labels(trajs, cfg.heuristic_tail_s)
    feats = standardize(feature_matrix(trajs, cfg.feature_tail_s))
    res = sfcm_fit(feats, priors_from_labels(heur, cfg.sfcm.n_clusters), cfg.sfcm,
                   seed=stage_seed(seed, "sfcm") & 0xFFFFFFFF)
    truth = np.array([t.truth for t in trajs], dtype=int)
    return LabeledPool(list(trajs), truth, heur, res.labels, res)


def simulate_pool(cfg: DatasetConfig | None = None, seed: int = 0) -> LabeledPool:
    cfg = cfg or DatasetConfig()
    trajs = simulate_trajectories(cfg.grid, cfg.n_per_cell, seed, cfg.generator)
    return label_pool(trajs, cfg, seed)


def windows(trajs, length: int, start: int) -> np.ndarray:
    n = trajs[0].n_samples
    if length < 2:
        raise ValueError(f"window of {length} samples is too short (need >= 2)")
    if start + length > n:
        raise ValueError(f"window of {length} samples from index {start} exceeds the "
                         f"{n}-sample trajectories")
    return np.stack([t.window(length, start) for t in trajs])


def build_dataset(pool: LabeledPool, cfg: DatasetConfig | None = None, seed: int = 0) -> Bundle:
    """Window, split, label and (optionally) augment.

    The test split holds real windows scored against the generator's intended
    class; only the training split carries the chosen (noisy) labels and the
    synthetic windows.
    """
    cfg = cfg or DatasetConfig()
    x = windows(pool.trajectories, cfg.window_length, cfg.generator.onset_index)
    train_idx, test_idx = stratified_split(pool.truth, cfg.test_fraction,
                                           np.random.default_rng(stage_seed(seed, "split")))
    labels = pool.labels(cfg.labeling)
    keep = train_idx[labels[train_idx] != UNLABELED]
    real = Dataset(x[keep], labels[keep])
    test = Dataset(x[test_idx], pool.truth[test_idx])
    info = {"labeling": cfg.labeling, "n_real_train": len(real), "n_test": len(test),
            "label_accuracy_train": float(np.mean(pool.truth[keep] == labels[keep]))}
    bundle = Bundle(real, test, cfg, len(real), info=info)
    if cfg.augment:
        t0 = time.perf_counter()
        aug = fit_augmenter(real.x, real.y, cfg.gan, seed=stage_seed(seed, "lsgan") & 0xFFFFFFFF,
                            n_components=cfg.n_components)
        counts = augmentation_counts(real.y, cfg.expansion)
        xs, ys = aug.generate(counts, seed=stage_seed(seed, "lsgan/sample") & 0xFFFFFFFF)
        bundle.augmenter = aug
        bundle.synthetic = Dataset(xs, ys)
        bundle.train = Dataset.concat([real, bundle.synthetic])
        info.update({"n_synthetic": len(ys), "synthetic_counts": {str(k): v for k, v in counts.items()},
                     "gan_seconds": time.perf_counter() - t0})
    return bundle


def generation_mmd(bundle: Bundle, seed: int = 0) -> dict:
    """Per-class MMD between real training windows and as many fresh synthetic ones,
    measured on windows standardised by the real statistics."""
    if bundle.augmenter is None:
        raise ValueError("bundle has no augmenter")
    real = bundle.real_train
    flat = real.x.reshape(len(real), -1)
    mu, sd = flat.mean(axis=0), flat.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    out = {}
    for label, gan in sorted(bundle.augmenter.gans.items()):
        xr = flat[real.y == label]
        xg = gan.sample(len(xr), seed + 17 * label).reshape(len(xr), -1)
        out[label] = mmd_rbf((xr - mu) / sd, (xg - mu) / sd)
    return out


def model_config_for(bundle: Bundle, base: ModelConfig | None = None, **kw) -> ModelConfig:
    base = base or ModelConfig()
    return replace(base, seq_len=bundle.train.x.shape[1], feature_dim=bundle.train.x.shape[2], **kw)


def run_training(bundle: Bundle, model_cfg: ModelConfig, train_cfg: TrainConfig, seed: int):
    model = build_model(model_cfg, stage_seed(seed, f"model/{model_cfg.variant}") & 0xFFFFFFFF)
    return train(model, bundle.train, train_cfg, test=bundle.test,
                 rng=np.random.default_rng(stage_seed(seed, "train")))


# ---------------------------------------------------------------- sweeps


def _map(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, jobs))


def _cell(job):
    bundle, model_cfg, train_cfg, seed, tags = job
    res = run_training(bundle, model_cfg, train_cfg, seed)
    m = res.metrics
    row = {**tags, "seed": seed, "accuracy": m.accuracy, "f1": m.f1, "auc": m.auc,
           "tp": m.tp, "fp": m.fp, "tn": m.tn, "fn": m.fn, "seconds": res.seconds}
    return row, list(res.loss_trace)


@dataclass
class Table:
    name: str
    rows: list = field(default_factory=list)
    traces: dict = field(default_factory=dict)  # key -> per-epoch losses

    def column(self, key: str, **where) -> list:
        return [r[key] for r in self.rows if all(r.get(k) == v for k, v in where.items())]

    def summary(self, group: tuple, metrics=("accuracy", "f1", "auc")) -> list[dict]:
        """Mean and std of ``metrics`` over rows grouped by the ``group`` keys."""
        groups = {}
        for r in self.rows:
            groups.setdefault(tuple(r[g] for g in group), []).append(r)
        out = []
        for key, rows in groups.items():
            row = dict(zip(group, key))
            row["n"] = len(rows)
            for m in metrics:
                vals = np.array([r[m] for r in rows if r[m] is not None], dtype=float)
                row[f"{m}_mean"] = float(vals.mean()) if vals.size else None
                row[f"{m}_std"] = float(vals.std()) if vals.size else None
            out.append(row)
        return out


def compare_models(bundle: Bundle, variants=("qstaformer", "transformer", "lstm"), seeds=(0,),
                   model_cfg: ModelConfig | None = None, train_cfg: TrainConfig | None = None,
                   workers: int = 1) -> Table:
    if not seeds:
        raise ValueError("compare_models needs at least one seed")
    train_cfg = train_cfg or TrainConfig()
    jobs = [(bundle, model_config_for(bundle, model_cfg, variant=v), train_cfg, s, {"variant": v})
            for s in seeds for v in variants]
    table = Table("compare")
    for (row, trace), job in zip(_map(_cell, jobs, workers), jobs):
        table.rows.append(row)
        table.traces[f"{row['variant']}_seed{row['seed']}"] = trace
    return table


def sweep_quantum(bundle: Bundle, qubits=(4, 6, 8, 10), layers=(2, 3, 4, 5, 6), seeds=(0,),
                  model_cfg: ModelConfig | None = None, train_cfg: TrainConfig | None = None,
                  workers: int = 1) -> Table:
    train_cfg = train_cfg or TrainConfig(epochs=15)
    jobs = []
    for s in seeds:
        for q in qubits:
            for l in layers:
                mc = model_config_for(bundle, model_cfg, variant="qstaformer", n_qubits=q, n_qlayers=l)
                jobs.append((bundle, mc, train_cfg, s, {"qubits": q, "layers": l}))
    table = Table("sweep_quantum")
    for row, trace in _map(_cell, jobs, workers):
        table.rows.append(row)
        table.traces[f"q{row['qubits']}_l{row['layers']}_seed{row['seed']}"] = trace
    return table


def sweep_sampling_window(pool: LabeledPool, windows_s=(0.03, 0.05, 0.07, 0.09, 0.11, 0.15, 0.2),
                          seeds=(0,), data_cfg: DatasetConfig | None = None,
                          model_cfg: ModelConfig | None = None, train_cfg: TrainConfig | None = None,
                          workers: int = 1, data_seed: int = 0) -> Table:
    """Rebuild the dataset at each window length (L = round(window * rate)) and retrain."""
    data_cfg = data_cfg or DatasetConfig()
    train_cfg = train_cfg or TrainConfig(epochs=15)
    n = pool.trajectories[0].n_samples
    for w in windows_s:
        length = int(round(w * data_cfg.generator.rate_hz))
        if length < 2:
            raise ValueError(f"window {w}s gives {length} samples; need >= 2")
        if data_cfg.generator.onset_index + length > n:
            raise ValueError(f"window {w}s exceeds the trajectory length")
    jobs = []
    for w in windows_s:
        bundle = build_dataset(pool, replace(data_cfg, window_s=w), data_seed)
        mc = model_config_for(bundle, model_cfg, variant="qstaformer")
        for s in seeds:
            jobs.append((bundle, mc, train_cfg, s, {"window_s": w, "steps": bundle.train.x.shape[1]}))
    table = Table("sweep_window")
    for row, trace in _map(_cell, jobs, workers):
        table.rows.append(row)
        table.traces[f"w{row['window_s']}_seed{row['seed']}"] = trace
    return table


# ---------------------------------------------------------------- ablation

ABLATION_ROWS = (
    ("QSTAformer-only", "heuristic", False),
    ("+SFCM", "sfcm", False),
    ("+LSGAN", "heuristic", True),
    ("Full Hybrid", "sfcm", True),
)


@dataclass
class AblationConfig:
    epochs: int = 15
    adv_epochs: int = 3
    epsilon: float = 0.03
    methods: tuple = ("mifgsm", "pgd", "cw")
    eval_samples: int | None = None  # None = whole test split
    mix_ratio: float = 0.5


def _ablation_cell(job):
    name, bundle, model_cfg, train_cfg, abl, seed = job
    res = run_training(bundle, model_cfg, train_cfg, seed)
    model = res.model
    adv_cfg = [AttackConfig("pgd", abl.epsilon), AttackConfig("mifgsm", abl.epsilon)]
    adversarial_training(model, bundle.train, adv_cfg, abl.mix_ratio, abl.adv_epochs, train_cfg,
                         seed=stage_seed(seed, "adv") & 0xFFFFFFFF)
    sub = bundle.test
    if abl.eval_samples is not None and abl.eval_samples < len(sub):
        pick = np.random.default_rng(stage_seed(seed, "ablation/eval")).permutation(len(sub))
        sub = sub.subset(np.sort(pick[:abl.eval_samples]))
    rep = robustness_eval(model, sub.x, sub.y, abl.methods, ("white_box",), (abl.epsilon,), seed=seed)
    return {"config": name, "seed": seed, "clean_accuracy": rep.clean_accuracy,
            "avg_robust_accuracy": rep.mean_robust_accuracy,
            **{f"robust_{r['method']}": r["accuracy"] for r in rep.rows}}, list(res.loss_trace)


def ablation_suite(pool: LabeledPool, seeds=(0, 1, 2), data_cfg: DatasetConfig | None = None,
                   model_cfg: ModelConfig | None = None, abl: AblationConfig | None = None,
                   workers: int = 1, data_seed: int = 0) -> Table:
    """Four pipelines, each adversarially trained and then attacked white-box.

    Rows carry clean test accuracy, the accuracy under each attack at one
    epsilon, their mean and the drop (clean minus mean robust).
    """
    data_cfg = data_cfg or DatasetConfig()
    abl = abl or AblationConfig()
    train_cfg = TrainConfig(epochs=abl.epochs)
    jobs = []
    for name, labeling, augment in ABLATION_ROWS:
        bundle = build_dataset(pool, replace(data_cfg, labeling=labeling, augment=augment), data_seed)
        mc = model_config_for(bundle, model_cfg, variant="qstaformer")
        jobs += [(name, bundle, mc, train_cfg, abl, s) for s in seeds]
    table = Table("ablation")
    for row, trace in _map(_ablation_cell, jobs, workers):
        row["robustness_drop"] = row["clean_accuracy"] - row["avg_robust_accuracy"]
        table.rows.append(row)
        table.traces[f"{row['config']}_seed{row['seed']}"] = trace
    return table


def ablation_means(table: Table) -> list[dict]:
    out = []
    for name, _, _ in ABLATION_ROWS:
        rows = [r for r in table.rows if r["config"] == name]
        if not rows:
            continue
        clean = float(np.mean([r["clean_accuracy"] for r in rows]))
        robust = float(np.mean([r["avg_robust_accuracy"] for r in rows]))
        out.append({"config": name, "n": len(rows), "clean_accuracy": clean,
                    "avg_robust_accuracy": robust, "robustness_drop": clean - robust})
    return out

"""Class-conditional window augmentation with one LSGAN per class.

The GAN does not see raw windows. Each class's flattened windows are
standardised per coordinate, projected onto their leading principal
directions, and the GAN learns the (whitened) principal codes. Decoding adds
Gaussian residual noise with the per-coordinate variance the projection
dropped, so generated windows keep the measurement-noise floor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lsgan import Generator, LsganConfig, LsganHistory, lsgan_train

REFERENCE_TOTAL = 10000
REFERENCE_ORIGINAL = 2040
REFERENCE_CLASS_SHARE = (5162 / 10000, 4838 / 10000)


@dataclass
class WindowCodec:
    shape: tuple
    mean: np.ndarray
    std: np.ndarray
    center: np.ndarray
    components: np.ndarray
    residual_std: np.ndarray

    @classmethod
    def fit(cls, windows: np.ndarray, n_components: int = 24) -> "WindowCodec":
        n = len(windows)
        flat = windows.reshape(n, -1)
        mean = flat.mean(axis=0)
        std = np.where(flat.std(axis=0) > 1e-12, flat.std(axis=0), 1.0)
        z = (flat - mean) / std
        center = z.mean(axis=0)
        _, _, vt = np.linalg.svd(z - center, full_matrices=False)
        comps = vt[:min(n_components, vt.shape[0])]
        resid = (z - center) - ((z - center) @ comps.T) @ comps
        return cls(windows.shape[1:], mean, std, center, comps, resid.std(axis=0))

    def encode(self, windows: np.ndarray) -> np.ndarray:
        z = (windows.reshape(len(windows), -1) - self.mean) / self.std
        return (z - self.center) @ self.components.T

    def decode(self, codes: np.ndarray, rng: np.random.Generator | None = None) -> np.ndarray:
        z = codes @ self.components + self.center
        if rng is not None:
            z = z + rng.normal(size=z.shape) * self.residual_std
        return (z * self.std + self.mean).reshape(len(codes), *self.shape)


@dataclass
class ClassGan:
    label: int
    codec: WindowCodec
    generator: Generator
    history: LsganHistory

    def sample(self, n: int, seed: int = 0) -> np.ndarray:
        if n == 0:
            return np.zeros((0, *self.codec.shape))
        codes = self.generator.sample(n, seed)
        return self.codec.decode(codes, np.random.default_rng([seed, 1]))


@dataclass
class Augmenter:
    gans: dict = field(default_factory=dict)

    def generate(self, counts: dict, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
        xs, ys = [], []
        for label in sorted(counts):
            n = int(counts[label])
            xs.append(self.gans[label].sample(n, seed + 7919 * label))
            ys.append(np.full(n, label, dtype=int))
        return np.concatenate(xs), np.concatenate(ys)


def fit_augmenter(x: np.ndarray, y: np.ndarray, cfg: LsganConfig | None = None, seed: int = 0,
                  n_components: int = 24) -> Augmenter:
    aug = Augmenter()
    for label in np.unique(y):
        xc = x[y == label]
        codec = WindowCodec.fit(xc, n_components)
        gen, _, hist = lsgan_train(codec.encode(xc), cfg, seed=seed + 101 * int(label), label=int(label))
        aug.gans[int(label)] = ClassGan(int(label), codec, gen, hist)
    return aug


def augmentation_counts(y: np.ndarray, expansion: float = REFERENCE_TOTAL / REFERENCE_ORIGINAL,
                        shares=REFERENCE_CLASS_SHARE) -> dict:
    """Synthetic samples per class so the real + synthetic set has ``expansion`` x
    the real size at the given class shares (never negative)."""
    total = int(round(expansion * len(y)))
    out = {}
    for label, share in enumerate(shares):
        have = int(np.sum(y == label))
        out[label] = max(int(round(share * total)) - have, 0)
    return out

"""Least-squares GAN over flattened, standardised trajectory windows (one GAN per class)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..autodiff import Adam, Tensor, ops
from ..models.layers import Module, param, xavier


@dataclass
class LsganConfig:
    latent_dim: int = 16
    gen_hidden: tuple = (64, 128)
    disc_hidden: tuple = (128, 64)
    lr: float = 1e-4
    betas: tuple = (0.5, 0.999)
    batch_size: int = 32
    epochs: int = 1000
    max_iterations: int = 3000
    k: int = 5

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.batch_size < 1 or self.latent_dim < 1:
            raise ValueError("batch_size and latent_dim must be >= 1")


def leaky_relu(x: Tensor, slope: float = 0.2) -> Tensor:
    return ops.relu(x) - ops.relu(-x) * slope


class MLP(Module):
    def __init__(self, sizes, rng: np.random.Generator, name: str):
        self.weights = []
        for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
            layer = Module()
            layer.W = param(xavier(rng, b, a, (a, b)), f"{name}.{i}.W")
            layer.b = param(np.zeros(b), f"{name}.{i}.b")
            self.weights.append(layer)

    def __call__(self, x) -> Tensor:
        h = x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=np.float64))
        for i, layer in enumerate(self.weights):
            h = h @ layer.W + layer.b
            if i < len(self.weights) - 1:
                h = leaky_relu(h)
        return h


def discriminator_loss(d_real, d_fake) -> Tensor:
    """``1/2 E[(D(x) - 1)^2] + 1/2 E[D(G(z))^2]``."""
    return ops.mean((d_real - 1.0) ** 2) * 0.5 + ops.mean(d_fake ** 2) * 0.5


def generator_loss(d_fake) -> Tensor:
    """``1/2 E[(D(G(z)) - 1)^2]``."""
    return ops.mean((d_fake - 1.0) ** 2) * 0.5


@dataclass
class Generator:
    net: MLP
    latent_dim: int
    mean: np.ndarray
    std: np.ndarray
    label: int | None = None

    def sample(self, n: int, seed: int = 0) -> np.ndarray:
        """``[n, dim]`` samples in the original (unstandardised) feature space."""
        if n == 0:
            return np.zeros((0, self.mean.size))
        z = np.random.default_rng(seed).normal(size=(n, self.latent_dim))
        return self.net(z).data * self.std + self.mean


@dataclass
class LsganHistory:
    d_loss: list = field(default_factory=list)
    g_loss: list = field(default_factory=list)
    iterations: int = 0
    epochs: float = 0.0
    warnings: list = field(default_factory=list)


def lsgan_train(real: np.ndarray, cfg: LsganConfig | None = None, seed: int = 0,
                label: int | None = None, callback=None) -> tuple[Generator, MLP, LsganHistory]:
    """Train one GAN on ``real`` (``[N, dim]``); stops at the epoch or iteration budget.

    One iteration is ``k`` discriminator steps on fresh real batches followed by
    one generator step; an epoch is one pass of real samples through the
    discriminator. ``callback(iteration, generator)`` runs every 100 iterations.
    """
    cfg = cfg or LsganConfig()
    real = np.asarray(real, dtype=np.float64).reshape(len(real), -1)
    if len(real) < 2 * cfg.batch_size:
        raise ValueError(f"lsgan_train needs >= {2 * cfg.batch_size} real samples, got {len(real)}")
    hist = LsganHistory()
    mean = real.mean(axis=0)
    std = real.std(axis=0)
    if np.all(std == 0):
        hist.warnings.append("degenerate real set: all samples identical")
    std = np.where(std > 1e-8, std, 1.0)
    x = (real - mean) / std
    rng = np.random.default_rng(seed)
    dim = x.shape[1]
    gen = MLP((cfg.latent_dim, *cfg.gen_hidden, dim), rng, "G")
    disc = MLP((dim, *cfg.disc_hidden, 1), rng, "D")
    opt_g = Adam(gen.parameters(), lr=cfg.lr, betas=cfg.betas)
    opt_d = Adam(disc.parameters(), lr=cfg.lr, betas=cfg.betas)
    generator = Generator(gen, cfg.latent_dim, mean, std, label)

    order = rng.permutation(len(x))
    cursor = 0
    seen = 0
    budget_samples = cfg.epochs * len(x)
    while hist.iterations < cfg.max_iterations and seen < budget_samples:
        for _ in range(cfg.k):
            if cursor + cfg.batch_size > len(x):
                order = rng.permutation(len(x))
                cursor = 0
            batch = x[order[cursor:cursor + cfg.batch_size]]
            cursor += cfg.batch_size
            seen += len(batch)
            z = rng.normal(size=(cfg.batch_size, cfg.latent_dim))
            fake = Tensor(gen(z).data)
            opt_d.zero_grad()
            loss_d = discriminator_loss(disc(batch), disc(fake))
            loss_d.backward()
            opt_d.step()
        z = rng.normal(size=(cfg.batch_size, cfg.latent_dim))
        opt_g.zero_grad()
        disc.set_requires_grad(False)
        loss_g = generator_loss(disc(gen(z)))
        loss_g.backward()
        disc.set_requires_grad(True)
        opt_g.step()
        hist.d_loss.append(float(loss_d.data))
        hist.g_loss.append(float(loss_g.data))
        hist.iterations += 1
        if callback is not None and hist.iterations % 100 == 0:
            callback(hist.iterations, generator)
    hist.epochs = seen / len(x)
    return generator, disc, hist


def lsgan_generate(generator: Generator, n: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """``(samples [n, dim], labels [n])``; labels come from the generator's class."""
    samples = generator.sample(n, seed)
    label = -1 if generator.label is None else generator.label
    return samples, np.full(n, label, dtype=int)

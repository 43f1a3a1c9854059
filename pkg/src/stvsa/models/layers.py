"""Building blocks shared by the hybrid model and the classical baselines.

Weight matrices follow the ``W x`` convention of the equations where the
equations give one (``W_e``, ``W_q``, ``W_o``, ``W_cls`` are ``[out, in]``);
attention and FFN weights are stored ``[in, out]`` for ``x W``.
"""

from __future__ import annotations

import math

import numpy as np

from ..autodiff import Tensor, ops
from ..autodiff.tensor import make_result
from ..quantum import CircuitSpec, VariationalBlock


class Module:
    """Minimal parameter container: tensors and sub-modules found on attributes."""

    def named_parameters(self, prefix: str = ""):
        for key, value in vars(self).items():
            name = f"{prefix}{key}"
            if isinstance(value, Tensor):
                yield name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(name + ".")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{name}.{i}.")

    def _buffers(self) -> tuple:
        return ()

    def named_buffers(self, prefix: str = ""):
        """Non-trainable arrays that still belong in a checkpoint."""
        for key in self._buffers():
            yield f"{prefix}{key}", getattr(self, key)
        for key, value in vars(self).items():
            if isinstance(value, Module):
                yield from value.named_buffers(f"{prefix}{key}.")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_buffers(f"{prefix}{key}.{i}.")

    def parameters(self) -> list[Tensor]:
        return [p for _, p in self.named_parameters()]

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        params = dict(self.named_parameters())
        missing = set(params) - set(state)
        unknown = set(state) - set(params)
        if missing or unknown:
            raise KeyError(f"state mismatch: missing={sorted(missing)} unknown={sorted(unknown)}")
        for name, p in params.items():
            arr = np.asarray(state[name], dtype=np.float64)
            if arr.shape != p.shape:
                raise ValueError(f"{name}: shape {arr.shape} != {p.shape}")
            p.data = arr.copy()

    def set_requires_grad(self, flag: bool) -> None:
        for p in self.parameters():
            p.requires_grad = flag


def xavier(rng: np.random.Generator, fan_out: int, fan_in: int, shape=None) -> np.ndarray:
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape or (fan_out, fan_in))


def param(data, name: str) -> Tensor:
    return Tensor(np.array(data, dtype=np.float64), requires_grad=True, name=name)


def positional_encoding(seq_len: int, d_model: int) -> np.ndarray:
    """Sinusoidal table: sin on even columns, cos on odd, frequencies 10000^(-2i/d)."""
    pos = np.arange(seq_len)[:, None]
    i = np.arange(0, d_model, 2)[None, :]
    angle = pos / np.power(10000.0, i / d_model)
    pe = np.zeros((seq_len, d_model))
    pe[:, 0::2] = np.sin(angle)
    pe[:, 1::2] = np.cos(angle[:, : d_model // 2])
    return pe


def time_signal(seq_len: int) -> np.ndarray:
    """Per-step offset added to the circuit angles: pi * i / (L - 1) - pi / 2."""
    if seq_len == 1:
        return np.zeros(1)
    return np.pi * np.arange(seq_len) / (seq_len - 1) - np.pi / 2


class LayerNorm(Module):
    def __init__(self, d: int, name: str = "ln", eps: float = 1e-5):
        self.gamma = param(np.ones(d), f"{name}.gamma")
        self.beta = param(np.zeros(d), f"{name}.beta")
        self.eps = eps

    def __call__(self, x: Tensor) -> Tensor:
        return ops.layer_norm(x, self.gamma, self.beta, self.eps)


class MultiHeadSelfAttention(Module):
    def __init__(self, d_model: int, n_heads: int, rng: np.random.Generator, name: str = "attn"):
        if d_model % n_heads:
            raise ValueError(f"d_model {d_model} not divisible by n_heads {n_heads}")
        self.n_heads = n_heads
        self.d_head = d_model // n_heads
        for key in ("q", "k", "v", "o"):
            setattr(self, f"W_{key}", param(xavier(rng, d_model, d_model, (d_model, d_model)), f"{name}.W_{key}"))
            setattr(self, f"b_{key}", param(np.zeros(d_model), f"{name}.b_{key}"))
        self.last_weights: np.ndarray | None = None

    def _split(self, t: Tensor, b: int, L: int) -> Tensor:
        return t.reshape(b, L, self.n_heads, self.d_head).transpose(0, 2, 1, 3)

    def __call__(self, h: Tensor) -> Tensor:
        b, L, d = h.shape
        q = self._split(h @ self.W_q + self.b_q, b, L)
        k = self._split(h @ self.W_k + self.b_k, b, L)
        v = self._split(h @ self.W_v + self.b_v, b, L)
        scores = (q @ k.T) * (1.0 / math.sqrt(self.d_head))
        weights = ops.softmax(scores, axis=-1)
        self.last_weights = weights.data
        ctx = (weights @ v).transpose(0, 2, 1, 3).reshape(b, L, d)
        return ctx @ self.W_o + self.b_o


class FeedForward(Module):
    """``act(x W_1 + b_1) W_2 + b_2``."""

    def __init__(self, d_model: int, d_ff: int, rng: np.random.Generator, activation: str = "relu",
                 name: str = "ffn"):
        if activation not in ("relu", "gelu"):
            raise ValueError(f"unknown activation {activation!r}")
        self.activation = activation
        self.W_1 = param(xavier(rng, d_ff, d_model, (d_model, d_ff)), f"{name}.W_1")
        self.b_1 = param(np.zeros(d_ff), f"{name}.b_1")
        self.W_2 = param(xavier(rng, d_model, d_ff, (d_ff, d_model)), f"{name}.W_2")
        self.b_2 = param(np.zeros(d_model), f"{name}.b_2")

    def __call__(self, x: Tensor) -> Tensor:
        hidden = x @ self.W_1 + self.b_1
        hidden = ops.relu(hidden) if self.activation == "relu" else ops.gelu(hidden)
        return hidden @ self.W_2 + self.b_2


class Embedding(Module):
    """Fixed input standardisation, ``LayerNorm(W_e x + b_e)``, then ``+ PE``."""

    def __init__(self, seq_len: int, feature_dim: int, d_model: int, rng: np.random.Generator):
        self.W_e = param(xavier(rng, d_model, feature_dim), "embed.W_e")
        self.b_e = param(np.zeros(d_model), "embed.b_e")
        self.norm = LayerNorm(d_model, "embed.ln")
        self.pe = positional_encoding(seq_len, d_model)
        self.input_mean = np.zeros(feature_dim)
        self.input_std = np.ones(feature_dim)

    def _buffers(self) -> tuple:
        return ("pe", "input_mean", "input_std")

    def __call__(self, x: Tensor) -> Tensor:
        L = x.shape[1]
        if L > self.pe.shape[0] or x.shape[2] != self.W_e.shape[1]:
            raise ValueError(f"embed: input {x.shape} does not fit L<={self.pe.shape[0]}, F={self.W_e.shape[1]}")
        z = (x - self.input_mean) * (1.0 / self.input_std)
        return self.norm(z @ self.W_e.T + self.b_e) + self.pe[:L]


class EncoderLayer(Module):
    """``z = LN(h + MHSA(h))``; ``out = LN(z + FFN(z))``."""

    def __init__(self, d_model: int, n_heads: int, d_ff: int, rng: np.random.Generator,
                 activation: str = "relu", name: str = "enc"):
        self.attn = MultiHeadSelfAttention(d_model, n_heads, rng, f"{name}.attn")
        self.norm1 = LayerNorm(d_model, f"{name}.ln1")
        self.ffn = FeedForward(d_model, d_ff, rng, activation, f"{name}.ffn")
        self.norm2 = LayerNorm(d_model, f"{name}.ln2")

    def __call__(self, h: Tensor) -> Tensor:
        z = self.norm1(h + self.attn(h))
        return self.norm2(z + self.ffn(z))


def quantum_expectations(angles: Tensor, theta: Tensor, spec: CircuitSpec,
                         gradient: str = "adjoint") -> Tensor:
    """Differentiable ``<Z_j>`` for every row of ``angles`` (``[..., n]``).

    ``gradient="shift"`` contracts the parameter-shift Jacobians (2 circuits
    per angle); ``"adjoint"`` computes the identical vector-Jacobian product
    from precomputed generator matrices (or a gate-by-gate sweep for large
    registers) and is what training uses.
    """
    if gradient not in ("adjoint", "shift"):
        raise ValueError(f"unknown quantum gradient mode {gradient!r}")
    lead = angles.shape[:-1]
    n = spec.n_qubits
    feats = angles.data.reshape(-1, n)
    need = theta.requires_grad or angles.requires_grad
    block = VariationalBlock(spec, theta.data, with_shifts=need and gradient == "shift",
                             with_generators=need and gradient == "adjoint", n_rows=len(feats))
    out = block.expectations(feats).reshape(*lead, n)

    def bw(g):
        g2 = g.reshape(-1, n)
        if gradient == "adjoint":
            ga, gt = block.vjp(feats, g2)
            return ga.reshape(angles.shape), gt
        ga = gt = None
        if angles.requires_grad:
            jac = block.feature_jacobian(feats)
            ga = np.einsum("mj,mjk->mk", g2, jac).reshape(angles.shape)
        if theta.requires_grad:
            gt = block.theta_vjp(feats, g2)
        return ga, gt

    return make_result(out, (angles, theta), bw)


class QuantumEncoderLayer(Module):
    """Attention sublayer, then the circuit branch with residual, then a GELU FFN."""

    def __init__(self, d_model: int, n_heads: int, d_ff: int, spec: CircuitSpec, seq_len: int,
                 rng: np.random.Generator, name: str = "qenc", gradient: str = "adjoint"):
        self.spec = spec
        self.gradient = gradient
        self.attn = MultiHeadSelfAttention(d_model, n_heads, rng, f"{name}.attn")
        self.norm1 = LayerNorm(d_model, f"{name}.ln1")
        self.W_q = param(xavier(rng, spec.n_qubits, d_model), f"{name}.W_q")
        self.theta = param(rng.uniform(-0.1, 0.1, size=spec.param_shape), f"{name}.theta")
        self.W_o = param(xavier(rng, d_model, spec.n_qubits), f"{name}.W_o")
        self.ffn = FeedForward(d_model, d_ff, rng, "gelu", f"{name}.ffn")
        self.norm2 = LayerNorm(d_model, f"{name}.ln2")
        self.t_signal = time_signal(seq_len)
        self.last_expectations: np.ndarray | None = None

    def _buffers(self) -> tuple:
        return ("t_signal",)

    def circuit_angles(self, h_attn: Tensor) -> Tensor:
        L = h_attn.shape[1]
        return ops.tanh(h_attn @ self.W_q.T) + self.t_signal[:L, None]

    def __call__(self, h: Tensor) -> Tensor:
        h_attn = self.norm1(h + self.attn(h))
        q = quantum_expectations(self.circuit_angles(h_attn), self.theta, self.spec, self.gradient)
        self.last_expectations = q.data
        z = h_attn + q @ self.W_o.T
        return self.norm2(z + self.ffn(z))


class Classifier(Module):
    """Logits from the last time step: ``W_cls h[L] + b_cls``."""

    def __init__(self, d_model: int, n_classes: int, rng: np.random.Generator):
        self.W_cls = param(xavier(rng, n_classes, d_model), "head.W_cls")
        self.b_cls = param(np.zeros(n_classes), "head.b_cls")

    def __call__(self, h: Tensor) -> Tensor:
        return h[:, -1, :] @ self.W_cls.T + self.b_cls

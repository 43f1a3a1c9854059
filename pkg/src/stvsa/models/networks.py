"""The hybrid classifier and its classical comparison baselines."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..autodiff import Tensor, ops
from ..quantum import CircuitSpec
from .layers import Classifier, Embedding, EncoderLayer, Module, QuantumEncoderLayer, param, xavier

VARIANTS = ("qstaformer", "transformer", "lstm")


@dataclass
class ModelConfig:
    seq_len: int = 10
    feature_dim: int = 9
    d_model: int = 32
    n_heads: int = 4
    d_ff: int = 64
    n_encoder_layers: int = 2
    n_classes: int = 2
    n_qubits: int = 4
    n_qlayers: int = 4
    variant: str = "qstaformer"
    quantum_gradient: str = "adjoint"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown model variant {self.variant!r}; expected one of {VARIANTS}")
        if self.d_model % self.n_heads:
            raise ValueError(f"d_model {self.d_model} not divisible by n_heads {self.n_heads}")
        if self.n_encoder_layers < 1:
            raise ValueError("n_encoder_layers must be >= 1")
        if self.quantum_gradient not in ("adjoint", "shift"):
            raise ValueError(f"unknown quantum_gradient {self.quantum_gradient!r}")
        if self.n_classes < 2:
            raise ValueError("n_classes must be >= 2")

    @property
    def circuit(self) -> CircuitSpec:
        return CircuitSpec(self.n_qubits, self.n_qlayers)

    def to_dict(self) -> dict:
        return asdict(self)


class SequenceClassifier(Module):
    """Common interface: ``logits(x)`` on ``[B, L, F]`` input, probabilities via softmax."""

    config: ModelConfig

    def logits(self, x) -> Tensor:
        raise NotImplementedError

    def forward(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(probabilities, logits)`` as arrays, both ``[B, c]``."""
        lg = self.logits(x)
        return ops.softmax(lg, axis=-1).data, lg.data

    def predict_proba(self, x, batch_size: int = 256) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        with frozen(self):
            chunks = [self.forward(x[i:i + batch_size])[0] for i in range(0, len(x), batch_size)]
        return np.concatenate(chunks) if chunks else np.zeros((0, self.config.n_classes))

    def predict(self, x) -> np.ndarray:
        return self.predict_proba(x).argmax(axis=1)

    def fit_scaler(self, x: np.ndarray) -> None:
        """Store per-feature mean/std of training windows ``[N, L, F]`` for input standardisation."""
        flat = np.asarray(x, dtype=np.float64).reshape(-1, x.shape[-1])
        self.embed.input_mean = flat.mean(axis=0)
        self.embed.input_std = np.maximum(flat.std(axis=0), 1e-6)

    @property
    def embed(self) -> Embedding:
        raise NotImplementedError


class frozen:
    """Context manager: parameters stop recording gradients inside the block."""

    def __init__(self, model: Module):
        self.params = model.parameters()

    def __enter__(self):
        self.flags = [p.requires_grad for p in self.params]
        for p in self.params:
            p.requires_grad = False
        return self

    def __exit__(self, *exc):
        for p, flag in zip(self.params, self.flags):
            p.requires_grad = flag
        return False


def _as_input(x) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=np.float64))


class QSTAformer(SequenceClassifier):
    """N-1 classical encoder layers followed by one quantum-enhanced encoder layer."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        self.config = config
        c = config
        self.embedding = Embedding(c.seq_len, c.feature_dim, c.d_model, rng)
        self.layers = [EncoderLayer(c.d_model, c.n_heads, c.d_ff, rng, "relu", f"enc{i}")
                       for i in range(c.n_encoder_layers - 1)]
        self.quantum = QuantumEncoderLayer(c.d_model, c.n_heads, c.d_ff, c.circuit, c.seq_len, rng,
                                           gradient=c.quantum_gradient)
        self.head = Classifier(c.d_model, c.n_classes, rng)

    @property
    def embed(self) -> Embedding:
        return self.embedding

    def encode(self, x) -> Tensor:
        h = self.embedding(_as_input(x))
        for layer in self.layers:
            h = layer(h)
        return self.quantum(h)

    def logits(self, x) -> Tensor:
        return self.head(self.encode(x))


class TransformerClassifier(SequenceClassifier):
    """Classical baseline: N classical encoder layers and the same head."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator, activations=None):
        self.config = config
        c = config
        acts = activations or ["relu"] * c.n_encoder_layers
        self.embedding = Embedding(c.seq_len, c.feature_dim, c.d_model, rng)
        self.layers = [EncoderLayer(c.d_model, c.n_heads, c.d_ff, rng, acts[i], f"enc{i}")
                       for i in range(c.n_encoder_layers)]
        self.head = Classifier(c.d_model, c.n_classes, rng)

    @property
    def embed(self) -> Embedding:
        return self.embedding

    def logits(self, x) -> Tensor:
        h = self.embedding(_as_input(x))
        for layer in self.layers:
            h = layer(h)
        return self.head(h)


class InputScaler(Module):
    """Fixed per-feature standardisation held as checkpointed buffers."""

    def __init__(self, feature_dim: int):
        self.input_mean = np.zeros(feature_dim)
        self.input_std = np.ones(feature_dim)

    def _buffers(self) -> tuple:
        return ("input_mean", "input_std")


class LSTMClassifier(SequenceClassifier):
    """Single-layer LSTM over the standardised sequence; last hidden state feeds the head."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        self.config = config
        c = config
        d = c.d_model
        self.W_ih = param(xavier(rng, 4 * d, c.feature_dim, (c.feature_dim, 4 * d)), "lstm.W_ih")
        self.W_hh = param(xavier(rng, 4 * d, d, (d, 4 * d)), "lstm.W_hh")
        self.b = param(np.zeros(4 * d), "lstm.b")
        self.head = Classifier(d, c.n_classes, rng)
        self.scaler = InputScaler(c.feature_dim)

    @property
    def embed(self):
        return self.scaler

    def logits(self, x) -> Tensor:
        x = _as_input(x)
        b, L, _ = x.shape
        d = self.config.d_model
        z = (x - self.scaler.input_mean) * (1.0 / self.scaler.input_std)
        gates_x = z @ self.W_ih + self.b
        h = Tensor(np.zeros((b, d)))
        cell = Tensor(np.zeros((b, d)))
        for t in range(L):
            gates = gates_x[:, t, :] + h @ self.W_hh
            i = ops.sigmoid(gates[:, :d])
            f = ops.sigmoid(gates[:, d:2 * d])
            g = ops.tanh(gates[:, 2 * d:3 * d])
            o = ops.sigmoid(gates[:, 3 * d:])
            cell = f * cell + i * g
            h = o * ops.tanh(cell)
        return self.head(ops.reshape(h, (b, 1, d)))


def build_model(config: ModelConfig, rng: np.random.Generator | int = 0) -> SequenceClassifier:
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    if config.variant == "qstaformer":
        return QSTAformer(config, rng)
    if config.variant == "transformer":
        return TransformerClassifier(config, rng)
    if config.variant == "lstm":
        return LSTMClassifier(config, rng)
    raise ValueError(f"unknown model variant {config.variant!r}")


def baseline(variant: str, config: ModelConfig | None = None, rng=0) -> SequenceClassifier:
    """Classical comparison model (``transformer`` or ``lstm``)."""
    if variant not in ("transformer", "lstm"):
        raise ValueError(f"unknown baseline variant {variant!r}")
    base = asdict(config) if config is not None else {}
    base["variant"] = variant
    return build_model(ModelConfig(**base), rng)

from .checkpoint import FORMAT_VERSION, load_checkpoint, read_meta, save_checkpoint
from .layers import (Classifier, Embedding, EncoderLayer, FeedForward, LayerNorm, Module,
                     MultiHeadSelfAttention, QuantumEncoderLayer, positional_encoding,
                     quantum_expectations, time_signal)
from .networks import (VARIANTS, LSTMClassifier, ModelConfig, QSTAformer, SequenceClassifier,
                       TransformerClassifier, baseline, build_model, frozen)

__all__ = [
    "FORMAT_VERSION", "Classifier", "Embedding", "EncoderLayer", "FeedForward", "LSTMClassifier",
    "LayerNorm", "ModelConfig", "Module", "MultiHeadSelfAttention", "QSTAformer",
    "QuantumEncoderLayer", "SequenceClassifier", "TransformerClassifier", "VARIANTS", "baseline",
    "build_model", "frozen", "load_checkpoint", "positional_encoding", "quantum_expectations",
    "read_meta", "save_checkpoint", "time_signal",
]

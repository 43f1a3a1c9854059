from . import ops
from .gradcheck import finite_diff_check, numeric_grad
from .optim import Adam, AdamW, OptimizerState, clip_grad_norm, cosine_lr
from .tensor import DimensionError, Tape, Tensor, backward, tensor, zero_grad

__all__ = [
    "Adam", "AdamW", "DimensionError", "OptimizerState", "Tape", "Tensor", "backward",
    "clip_grad_norm", "cosine_lr", "finite_diff_check", "numeric_grad", "ops", "tensor",
    "zero_grad",
]

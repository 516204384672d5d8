"""Differentiable tensor kernel: autodiff, layers, losses, Adam and gradient checking."""

from .gradcheck import NondeterministicLoss, finite_diff_grad_check, relative_error
from .losses import bce_logits_loss, bce_with_logits, cross_entropy, cross_entropy_loss
from .nn import (
    BiRNN,
    FeedForward,
    GRUCell,
    LayerNorm,
    Linear,
    LSTMCell,
    Module,
    MultiHeadSelfAttention,
    birnn_encode,
    scaled_dot_attention,
    sequence_max_pool,
    sinusoidal_positions,
)
from .optim import Adam, AdamState, adam_step, linear_decay
from .tensor import ShapeError, Tensor, as_tensor, parameter

__all__ = [
    "Adam",
    "AdamState",
    "BiRNN",
    "FeedForward",
    "GRUCell",
    "LSTMCell",
    "LayerNorm",
    "Linear",
    "Module",
    "MultiHeadSelfAttention",
    "NondeterministicLoss",
    "ShapeError",
    "Tensor",
    "adam_step",
    "as_tensor",
    "bce_logits_loss",
    "bce_with_logits",
    "birnn_encode",
    "cross_entropy",
    "cross_entropy_loss",
    "finite_diff_grad_check",
    "linear_decay",
    "parameter",
    "relative_error",
    "scaled_dot_attention",
    "sequence_max_pool",
    "sinusoidal_positions",
]

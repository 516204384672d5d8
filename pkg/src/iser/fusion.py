"""Cross attention between the entity and relation views, fused by a BiLSTM."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import tensor as T
from .numerics.nn import BiRNN, Module, scaled_dot_attention
from .numerics.tensor import ShapeError, Tensor


@dataclass
class FusedSequence:
    H: Tensor
    attn_e: np.ndarray
    attn_r: np.ndarray


def cross_attend(x_e: Tensor, x_r: Tensor):
    """Revise each view by attending over it with the other view as the query.

    Returns ``(x_e_rev, x_r_rev, attn_e, attn_r)`` where ``attn_e`` is the
    weight matrix queried by the relation view over the entity view, and
    ``attn_r`` the reverse.
    """
    x_e, x_r = T.as_tensor(x_e), T.as_tensor(x_r)
    if x_e.shape != x_r.shape:
        raise ShapeError(f"entity and relation views differ in shape: {x_e.shape} vs {x_r.shape}")
    x_e_rev, attn_e = scaled_dot_attention(x_r, x_e, x_e, return_weights=True)
    x_r_rev, attn_r = scaled_dot_attention(x_e, x_r, x_r, return_weights=True)
    return x_e_rev, x_r_rev, attn_e, attn_r


class Fusion(Module):
    def __init__(self, d: int, rng, cell: str = "lstm", dtype=np.float64):
        if d % 2:
            raise ValueError(f"fusion needs an even model width to split across directions, got {d}")
        self.d = d
        self.rnn = BiRNN(2 * d, d // 2, cell, rng, dtype)

    def fuse(self, x_e_rev: Tensor, x_r_rev: Tensor) -> Tensor:
        out, _ = self.rnn(T.concat([x_e_rev, x_r_rev], axis=-1))
        return out

    def __call__(self, x_e: Tensor, x_r: Tensor) -> FusedSequence:
        x_e_rev, x_r_rev, attn_e, attn_r = cross_attend(x_e, x_r)
        return FusedSequence(self.fuse(x_e_rev, x_r_rev), attn_e.data, attn_r.data)

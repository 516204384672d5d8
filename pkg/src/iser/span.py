"""Span candidates, dual masks, and the three span features.

Every feature function is vectorized over a batch of spans: ``spans`` is a
sequence of ``(start, end)`` pairs with ``end`` exclusive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import tensor as T
from .numerics.nn import BiRNN, Module, MultiHeadSelfAttention
from .numerics.tensor import ShapeError, Tensor


@dataclass(frozen=True)
class SpanCandidate:
    start: int
    width: int
    n: int

    @property
    def end(self) -> int:
        return self.start + self.width

    @property
    def span_mask(self) -> np.ndarray:
        return build_masks(self.start, self.width, self.n)[0]

    @property
    def context_mask(self) -> np.ndarray:
        return build_masks(self.start, self.width, self.n)[1]


def enumerate_spans(n: int, k: int) -> list[SpanCandidate]:
    """All spans of width 1..min(k, n), ordered by width and then start."""
    if n < 1 or k < 1:
        raise ValueError(f"need n >= 1 and k >= 1, got n={n}, k={k}")
    return [SpanCandidate(start, width, n)
            for width in range(1, min(k, n) + 1)
            for start in range(n - width + 1)]


def build_masks(start: int, width: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    if width < 1 or start < 0 or start + width > n:
        raise IndexError(f"span (start={start}, width={width}) outside a sentence of {n} tokens")
    span_mask = np.zeros(n, dtype=np.int64)
    span_mask[start:start + width] = 1
    return span_mask, 1 - span_mask


def span_mask_matrix(spans, n: int) -> np.ndarray:
    """Boolean (S, n) matrix with row i marking the tokens of span i."""
    mask = np.zeros((len(spans), n), dtype=bool)
    for i, (start, end) in enumerate(spans):
        if not 0 <= start < end <= n:
            raise IndexError(f"span ({start}, {end}) outside a sentence of {n} tokens")
        mask[i, start:end] = True
    return mask


def span_internal(H: Tensor, spans) -> Tensor:
    """Max-pool over each span's rows of ``H``; returns (S, d)."""
    mask = span_mask_matrix(spans, H.shape[0])
    return T.masked_max(H, mask[:, :, None], axis=-2)


class WidthTable(Module):
    def __init__(self, k: int, d_w: int, rng, dtype=np.float64):
        self.k, self.d_w = k, d_w
        self.table = T.parameter(rng.normal(0.0, 1.0 / math.sqrt(d_w), size=(k, d_w)), dtype=dtype)

    def __call__(self, widths) -> Tensor:
        widths = np.atleast_1d(np.asarray(widths, dtype=np.int64))
        bad = widths[(widths < 1) | (widths > self.k)]
        if bad.size:
            raise IndexError(f"span width {int(bad[0])} outside the table range 1..{self.k}")
        return self.table[widths - 1]


def width_embed(table: WidthTable, width: int) -> Tensor:
    return table([width])[0]


class SEA(Module):
    """Context encoder for a span: multi-head self-attention over the sentence
    with the span hidden behind a learned fill vector, a residual add, then a
    BiGRU summarized to one vector of width ``d``."""

    def __init__(self, d: int, n_heads: int, rng, pool: str = "final", dtype=np.float64):
        if d % n_heads:
            raise ValueError(f"width {d} is not divisible by {n_heads} heads")
        if d % 2:
            raise ValueError(f"context encoder needs an even width, got {d}")
        if pool not in ("final", "max"):
            raise ValueError(f"pool must be 'final' or 'max', got {pool!r}")
        self.pool = pool
        self.attn = MultiHeadSelfAttention(d, n_heads, rng, out_proj=False, dtype=dtype)
        self.fill = T.parameter(rng.normal(0.0, 1.0 / math.sqrt(d), size=(d,)), dtype=dtype)
        self.rnn = BiRNN(d, d // 2, "gru", rng, dtype)

    def masked_inputs(self, H: Tensor, spans) -> Tensor:
        mask = span_mask_matrix(spans, H.shape[0])[:, :, None].astype(H.dtype)
        return H * (1.0 - mask) + self.fill * mask

    def __call__(self, H: Tensor, spans, return_weights: bool = False):
        if len(spans) == 0:
            raise ShapeError("no spans given")
        h_mask = self.masked_inputs(H, spans)
        attended, weights = self.attn(h_mask, return_weights=True)
        outputs, final = self.rnn(attended + h_mask)
        c = final if self.pool == "final" else T.max_pool(outputs, axis=1)
        return (c, weights.data) if return_weights else c


def sea_context(sea: SEA, H: Tensor, candidate: SpanCandidate) -> Tensor:
    """Context vector of width ``d`` for one candidate."""
    return sea(H, [(candidate.start, candidate.end)])[0]

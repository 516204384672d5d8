"""Parameter containers and the layers the model is assembled from."""

from __future__ import annotations

import math
from typing import Iterator

import numpy as np

from . import tensor as T
from .tensor import ShapeError, Tensor


class Module:
    """Base class: sub-modules and parameters are discovered from attributes."""

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for key, value in vars(self).items():
            name = f"{prefix}{key}"
            if isinstance(value, Tensor) and value.requires_grad:
                yield name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(name + ".")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{name}.{i}.")

    def parameters(self) -> dict[str, Tensor]:
        return dict(self.named_parameters())

    def zero_grad(self):
        for p in self.parameters().values():
            p.zero_grad()


def uniform(rng: np.random.Generator, shape, bound: float, dtype=np.float64) -> Tensor:
    return T.parameter(rng.uniform(-bound, bound, size=shape), dtype=dtype)


class Linear(Module):
    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator, dtype=np.float64):
        bound = 1.0 / math.sqrt(d_in)
        self.d_in, self.d_out = d_in, d_out
        self.weight = uniform(rng, (d_in, d_out), bound, dtype)
        self.bias = uniform(rng, (d_out,), bound, dtype)

    def __call__(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.d_in:
            raise ShapeError(f"Linear expects last dim {self.d_in}, got {x.shape}")
        if x.ndim == 1:
            return (x.reshape(1, -1) @ self.weight + self.bias).reshape(-1)
        return x @ self.weight + self.bias


class LayerNorm(Module):
    def __init__(self, d: int, dtype=np.float64):
        self.gain = T.parameter(np.ones(d), dtype=dtype)
        self.bias = T.parameter(np.zeros(d), dtype=dtype)

    def __call__(self, x: Tensor) -> Tensor:
        return T.layer_norm(x, self.gain, self.bias)


class FeedForward(Module):
    """Two linear maps with a ReLU between them."""

    def __init__(self, d_in: int, d_hidden: int, d_out: int, rng, dtype=np.float64):
        self.inner = Linear(d_in, d_hidden, rng, dtype)
        self.outer = Linear(d_hidden, d_out, rng, dtype)

    def __call__(self, x: Tensor) -> Tensor:
        return self.outer(T.relu(self.inner(x)))


# ---------------------------------------------------------------------------
# attention


def scaled_dot_attention(q, k, v, return_weights: bool = False):
    """``softmax(q kᵀ / sqrt(d)) v`` over the last two axes.

    ``q`` is (..., a, d); ``k`` and ``v`` are (..., b, d). Leading axes broadcast.
    """
    q, k, v = T.as_tensor(q), T.as_tensor(k), T.as_tensor(v)
    if q.shape[-1] != k.shape[-1]:
        raise ShapeError(f"query/key widths differ: {q.shape} vs {k.shape}")
    if k.shape[-2] != v.shape[-2]:
        raise ShapeError(f"key/value row counts differ: {k.shape} vs {v.shape}")
    d = q.shape[-1]
    if d < 1:
        raise ShapeError("attention width must be positive")
    weights = T.softmax(T.matmul(q, T.swap_last(k)) / math.sqrt(d), axis=-1)
    out = T.matmul(weights, v)
    return (out, weights) if return_weights else out


class MultiHeadSelfAttention(Module):
    """Per-head projections of one input sequence into queries, keys and values.

    With ``out_proj`` off the concatenated heads are returned directly, which
    keeps the output width at ``d`` without an extra map.
    """

    def __init__(self, d: int, n_heads: int, rng, out_proj: bool = False, dtype=np.float64):
        if d % n_heads:
            raise ValueError(f"width {d} is not divisible by {n_heads} heads")
        self.d, self.n_heads = d, n_heads
        bound = 1.0 / math.sqrt(d)
        self.w_q = uniform(rng, (d, d), bound, dtype)
        self.w_k = uniform(rng, (d, d), bound, dtype)
        self.w_v = uniform(rng, (d, d), bound, dtype)
        self.out = Linear(d, d, rng, dtype) if out_proj else None

    def _split(self, x: Tensor) -> Tensor:
        *lead, n, _ = x.shape
        dh = self.d // self.n_heads
        x = T.reshape(x, (*lead, n, self.n_heads, dh))
        axes = list(range(len(lead))) + [len(lead) + 1, len(lead), len(lead) + 2]
        return T.transpose(x, axes)

    def __call__(self, x: Tensor, return_weights: bool = False):
        *lead, n, d = x.shape
        q = self._split(x @ self.w_q)
        k = self._split(x @ self.w_k)
        v = self._split(x @ self.w_v)
        heads, weights = scaled_dot_attention(q, k, v, return_weights=True)
        axes = list(range(len(lead))) + [len(lead) + 1, len(lead), len(lead) + 2]
        merged = T.reshape(T.transpose(heads, axes), (*lead, n, d))
        if self.out is not None:
            merged = self.out(merged)
        return (merged, weights) if return_weights else merged


# ---------------------------------------------------------------------------
# recurrent cells


def _sig(x):
    return T._stable_sigmoid(x)


def lstm_step(x_proj: Tensor, state: Tensor, w_h: Tensor) -> Tensor:
    """One LSTM step on a packed state ``[h, c]`` of shape (batch, 2*hidden).

    ``x_proj`` holds the input projection plus bias for the four gates in the
    order input, forget, candidate, output.
    """
    hd = w_h.shape[0]
    h, c = state.data[:, :hd], state.data[:, hd:]
    gates = x_proj.data + h @ w_h.data
    i = _sig(gates[:, :hd])
    f = _sig(gates[:, hd:2 * hd])
    g = np.tanh(gates[:, 2 * hd:3 * hd])
    o = _sig(gates[:, 3 * hd:])
    c_new = f * c + i * g
    tc = np.tanh(c_new)
    h_new = o * tc

    def backward(grad):
        gh, gc = grad[:, :hd], grad[:, hd:]
        dc_new = gc + gh * o * (1.0 - tc * tc)
        dgates = np.concatenate([
            dc_new * g * i * (1.0 - i),
            dc_new * c * f * (1.0 - f),
            dc_new * i * (1.0 - g * g),
            gh * tc * o * (1.0 - o),
        ], axis=1)
        dstate = np.concatenate([dgates @ w_h.data.T, dc_new * f], axis=1)
        return dgates, dstate, h.T @ dgates

    return T._make(np.concatenate([h_new, c_new], axis=1), (x_proj, state, w_h), backward)


def gru_step(x_proj: Tensor, h: Tensor, w_h: Tensor) -> Tensor:
    """One GRU step; gate order in ``x_proj`` and ``w_h`` is update, reset, candidate."""
    hd = w_h.shape[0]
    hp, xp, w = h.data, x_proj.data, w_h.data
    zr = _sig(xp[:, :2 * hd] + hp @ w[:, :2 * hd])
    z, r = zr[:, :hd], zr[:, hd:]
    rh = r * hp
    n = np.tanh(xp[:, 2 * hd:] + rh @ w[:, 2 * hd:])
    h_new = (1.0 - z) * n + z * hp

    def backward(grad):
        da_n = grad * (1.0 - z) * (1.0 - n * n)
        d_rh = da_n @ w[:, 2 * hd:].T
        da_z = grad * (hp - n) * z * (1.0 - z)
        da_r = d_rh * hp * r * (1.0 - r)
        da_zr = np.concatenate([da_z, da_r], axis=1)
        dh = grad * z + d_rh * r + da_zr @ w[:, :2 * hd].T
        dxp = np.concatenate([da_zr, da_n], axis=1)
        dw = np.concatenate([hp.T @ da_zr, rh.T @ da_n], axis=1)
        return dxp, dh, dw

    return T._make(h_new, (x_proj, h, w_h), backward)


class LSTMCell(Module):
    """Gate order in the stacked weights: input, forget, candidate, output."""

    def __init__(self, d_in: int, hidden: int, rng, dtype=np.float64):
        bound = 1.0 / math.sqrt(hidden)
        self.hidden = hidden
        self.w_x = uniform(rng, (d_in, 4 * hidden), bound, dtype)
        self.w_h = uniform(rng, (hidden, 4 * hidden), bound, dtype)
        b = rng.uniform(-bound, bound, size=4 * hidden)
        b[hidden:2 * hidden] = 1.0
        self.bias = T.parameter(b, dtype=dtype)

    state_width = property(lambda self: 2 * self.hidden)

    def step(self, x_proj: Tensor, state: Tensor) -> Tensor:
        return lstm_step(x_proj, state, self.w_h)


class GRUCell(Module):
    """Gate order in the stacked weights: update, reset, candidate."""

    def __init__(self, d_in: int, hidden: int, rng, dtype=np.float64):
        bound = 1.0 / math.sqrt(hidden)
        self.hidden = hidden
        self.w_x = uniform(rng, (d_in, 3 * hidden), bound, dtype)
        self.w_h = uniform(rng, (hidden, 3 * hidden), bound, dtype)
        self.bias = uniform(rng, (3 * hidden,), bound, dtype)

    state_width = property(lambda self: self.hidden)

    def step(self, x_proj: Tensor, h: Tensor) -> Tensor:
        return gru_step(x_proj, h, self.w_h)


CELLS = {"lstm": LSTMCell, "gru": GRUCell}


class BiRNN(Module):
    """Bidirectional recurrent encoder over (batch, n, d_in) or (n, d_in) input.

    Returns the per-position outputs (forward state ⊕ backward state, width
    ``2 * hidden``) and the final states of both directions, each (batch, 2*hidden).
    """

    def __init__(self, d_in: int, hidden: int, cell: str, rng, dtype=np.float64):
        if cell not in CELLS:
            raise ValueError(f"unknown recurrent cell {cell!r}; expected one of {sorted(CELLS)}")
        self.cell_type = cell
        self.d_in, self.hidden = d_in, hidden
        self.forward_cell = CELLS[cell](d_in, hidden, rng, dtype)
        self.backward_cell = CELLS[cell](d_in, hidden, rng, dtype)

    def _run(self, cell, x: Tensor, reverse: bool):
        batch, n, _ = x.shape
        proj = x @ cell.w_x + cell.bias
        state = T.Tensor(np.zeros((batch, cell.state_width), dtype=x.dtype))
        states = [None] * n
        steps = range(n - 1, -1, -1) if reverse else range(n)
        for t in steps:
            state = cell.step(proj[:, t, :], state)
            states[t] = state
        hidden = T.stack(states, axis=1)[:, :, :self.hidden]
        return hidden, state[:, :self.hidden]

    def __call__(self, x: Tensor):
        squeeze = x.ndim == 2
        if squeeze:
            x = T.reshape(x, (1, *x.shape))
        if x.shape[1] == 0:
            raise ShapeError("recurrent encoder over an empty sequence")
        if x.shape[2] != self.d_in:
            raise ShapeError(f"BiRNN expects input width {self.d_in}, got {x.shape[2]}")
        fwd, fwd_last = self._run(self.forward_cell, x, reverse=False)
        bwd, bwd_last = self._run(self.backward_cell, x, reverse=True)
        out = T.concat([fwd, bwd], axis=-1)
        final = T.concat([fwd_last, bwd_last], axis=-1)
        if squeeze:
            out = T.reshape(out, out.shape[1:])
            final = T.reshape(final, final.shape[1:])
        return out, final


def birnn_encode(seq, rnn: BiRNN) -> Tensor:
    """Per-position bidirectional states for a list or matrix of input vectors."""
    if isinstance(seq, (list, tuple)):
        if not seq:
            raise ShapeError("recurrent encoder over an empty sequence")
        seq = T.stack([T.as_tensor(v) for v in seq], axis=0)
    out, _ = rnn(T.as_tensor(seq))
    return out


def sequence_max_pool(seq) -> Tensor:
    """Elementwise max over a list of vectors (or the rows of a matrix)."""
    if isinstance(seq, (list, tuple)):
        if not seq:
            raise ShapeError("max-pool over an empty sequence")
        seq = T.stack([T.as_tensor(v) for v in seq], axis=0)
    return T.max_pool(T.as_tensor(seq), axis=0)


def sinusoidal_positions(n: int, d: int, dtype=np.float64) -> np.ndarray:
    pos = np.arange(n)[:, None]
    i = np.arange(d)[None, :]
    angle = pos / np.power(10000.0, (2 * (i // 2)) / d)
    return np.where(i % 2 == 0, np.sin(angle), np.cos(angle)).astype(dtype)

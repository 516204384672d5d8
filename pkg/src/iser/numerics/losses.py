"""Classification losses with fused, numerically stable gradients."""

from __future__ import annotations

import numpy as np

from .tensor import ShapeError, Tensor, _make, _stable_sigmoid, as_tensor


def cross_entropy(logits: Tensor, labels) -> Tensor:
    """Mean of ``-log softmax(logits)[label]`` over the rows of ``logits``.

    ``logits`` is (N, C) or a single vector of C scores; ``labels`` holds N
    class indices (or one index for the vector case).
    """
    single = logits.ndim == 1
    z = logits.data[None, :] if single else logits.data
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    n, c = z.shape
    if c < 2:
        raise ShapeError("cross_entropy needs at least 2 classes")
    if labels.shape != (n,):
        raise ShapeError(f"expected {n} labels, got shape {labels.shape}")
    if np.any(labels < 0) or np.any(labels >= c):
        raise IndexError(f"label out of range for {c} classes: {labels.tolist()}")
    shifted = z - z.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1))
    rows = np.arange(n)
    losses = lse - shifted[rows, labels]
    out = np.asarray(losses.mean(), dtype=z.dtype)

    def backward(g):
        probs = np.exp(shifted - lse[:, None])
        probs[rows, labels] -= 1.0
        grad = probs * (g / n)
        return (grad[0] if single else grad,)

    return _make(out, (logits,), backward)


def bce_with_logits(logits: Tensor, targets) -> Tensor:
    """Mean binary cross-entropy over every cell of ``logits``.

    Uses ``max(x, 0) - x*t + log(1 + exp(-|x|))`` so large logits never overflow.
    """
    logits = as_tensor(logits)
    x = logits.data
    t = np.asarray(targets, dtype=x.dtype)
    if t.shape != x.shape:
        raise ShapeError(f"targets shape {t.shape} does not match logits {x.shape}")
    if not np.all((t == 0) | (t == 1)):
        raise ValueError("BCE targets must be 0 or 1")
    if x.size == 0:
        raise ShapeError("bce_with_logits over an empty batch")
    cells = np.maximum(x, 0.0) - x * t + np.log1p(np.exp(-np.abs(x)))
    out = np.asarray(cells.mean(), dtype=x.dtype)

    def backward(g):
        return ((_stable_sigmoid(x) - t) * (g / x.size),)

    return _make(out, (logits,), backward)


def cross_entropy_loss(logits, label: int) -> Tensor:
    """Single-sample convenience wrapper around :func:`cross_entropy`."""
    return cross_entropy(as_tensor(logits), [label])


def bce_logits_loss(logit, target) -> Tensor:
    """Single-cell convenience wrapper around :func:`bce_with_logits`."""
    logit = as_tensor(logit)
    return bce_with_logits(logit, np.asarray(target, dtype=logit.dtype).reshape(logit.shape))

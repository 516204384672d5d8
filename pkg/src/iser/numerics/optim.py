"""Adam with a linearly decaying learning rate."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import Tensor


def linear_decay(base_lr: float, step: int, total_steps: int | None) -> float:
    """Learning rate for 1-based ``step``: ``base_lr`` at step 1, 0 at ``total_steps``."""
    if not total_steps or total_steps <= 1:
        return base_lr
    frac = (step - 1) / (total_steps - 1)
    return base_lr * max(0.0, 1.0 - frac)


@dataclass
class AdamState:
    base_lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    total_steps: int | None = None
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def lr(self, step: int | None = None) -> float:
        return linear_decay(self.base_lr, self.t if step is None else step, self.total_steps)


def adam_step(params: dict[str, Tensor], grads: dict[str, np.ndarray], state: AdamState) -> float:
    """Apply one bias-corrected Adam update in place; returns the learning rate used.

    Raises ``FloatingPointError`` naming the first parameter with a non-finite
    gradient, before anything is modified.
    """
    for name, g in grads.items():
        if name not in params:
            raise KeyError(f"gradient for unknown parameter {name!r}")
        if g.shape != params[name].shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {params[name].shape} for {name!r}")
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient for parameter {name!r}")

    state.t += 1
    lr = state.lr()
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p.data)
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p.data -= lr * (m / c1) / (np.sqrt(v / c2) + state.epsilon)
    return lr


class Adam:
    """Convenience wrapper reading gradients straight off the parameter tensors."""

    def __init__(self, params: dict[str, Tensor], lr: float = 1e-3, betas=(0.9, 0.999),
                 eps: float = 1e-8, total_steps: int | None = None):
        self.params = params
        self.state = AdamState(base_lr=lr, beta1=betas[0], beta2=betas[1], epsilon=eps,
                               total_steps=total_steps)

    def step(self, scale: float = 1.0) -> float:
        grads = {name: p.grad * scale for name, p in self.params.items()}
        return adam_step(self.params, grads, self.state)

    def zero_grad(self):
        for p in self.params.values():
            p.zero_grad()

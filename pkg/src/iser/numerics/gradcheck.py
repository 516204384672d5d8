"""Central-difference gradient checking."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .tensor import Tensor


class NondeterministicLoss(RuntimeError):
    pass


def relative_error(analytic, numeric) -> np.ndarray:
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    return np.abs(analytic - numeric) / np.maximum(1e-8, np.abs(analytic) + np.abs(numeric))


def finite_diff_grad_check(
    loss_fn: Callable[[], Tensor],
    params: dict[str, Tensor],
    eps: float = 1e-4,
    max_coords: int | None = None,
    rng: np.random.Generator | None = None,
    analytic: dict[str, np.ndarray] | None = None,
    per_param: dict | None = None,
) -> float:
    """Max relative error between backprop gradients and central differences.

    ``loss_fn`` recomputes the scalar loss from the current parameter values. At
    most ``max_coords`` coordinates per parameter are probed (all of them when
    None). ``analytic`` overrides the backprop gradients, which is how the
    checker itself is tested. ``per_param``, when given, receives the max error
    of each parameter.
    """
    for p in params.values():
        if p.data.dtype != np.float64:
            raise TypeError("gradient checking requires double precision parameters")
    first = float(loss_fn().data)
    if float(loss_fn().data) != first:
        raise NondeterministicLoss("loss_fn is not deterministic; disable dropout (eval mode)")

    if analytic is None:
        for p in params.values():
            p.zero_grad()
        loss_fn().backward()
        analytic = {name: p.grad.copy() for name, p in params.items()}

    rng = rng or np.random.default_rng(0)
    worst = 0.0
    for name, p in params.items():
        flat = p.data.reshape(-1)
        coords = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            coords = rng.choice(flat.size, size=max_coords, replace=False)
        agrad = analytic[name].reshape(-1)
        err_here = 0.0
        for i in coords:
            orig = flat[i]
            flat[i] = orig + eps
            up = float(loss_fn().data)
            flat[i] = orig - eps
            down = float(loss_fn().data)
            flat[i] = orig
            numeric = (up - down) / (2.0 * eps)
            err_here = max(err_here, float(relative_error(agrad[i], numeric)))
        if per_param is not None:
            per_param[name] = err_here
        worst = max(worst, err_here)
    return worst

"""Finite-difference validation of the reverse-mode gradients."""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor
from .errors import NumericalError


def gradient_check(
    loss_fn,
    params: list[Tensor],
    rng: np.random.Generator | None = None,
    coords_per_param: int = 20,
    step: float = 1e-4,
) -> float:
    """Max relative error between backprop and central differences.

    ``loss_fn`` must rebuild the forward pass from the params' current
    data on every call. A random subset of coordinates per parameter is
    probed; the relative error uses the larger gradient magnitude as the
    scale, falling back to absolute error below 1e-8.
    """
    if rng is None:
        rng = np.random.default_rng(0)

    for p in params:
        p.zero_grad()
    loss = loss_fn()
    loss.backward()
    grads = []
    for p in params:
        if p.grad is None:
            raise ValueError("parameter received no gradient; is it connected?")
        if not np.all(np.isfinite(p.grad)):
            raise NumericalError("non-finite gradient")
        grads.append(p.grad.copy())

    worst = 0.0
    for p, g in zip(params, grads):
        n = p.data.size
        coords = (
            np.arange(n)
            if n <= coords_per_param
            else rng.choice(n, size=coords_per_param, replace=False)
        )
        for idx in coords:
            original = p.data.flat[idx]
            p.data.flat[idx] = original + step
            f_plus = float(loss_fn().data)
            p.data.flat[idx] = original - step
            f_minus = float(loss_fn().data)
            p.data.flat[idx] = original
            numeric = (f_plus - f_minus) / (2.0 * step)
            analytic = float(g.flat[idx])
            scale = max(abs(numeric), abs(analytic))
            err = abs(numeric - analytic)
            if scale > 1e-8:
                err /= scale
            worst = max(worst, err)
    return worst

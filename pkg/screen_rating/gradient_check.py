"""
Finite-difference verification of the reverse-mode gradients.
"""

from typing import Callable, Optional

import numpy as np

from .errors import ContractError
from .tensor import Tensor, no_grad


def numerical_gradient(f: Callable[[Tensor], Tensor], x: Tensor, h: float = 1e-5,
                       coords: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Central differences of scalar ``f`` at ``x``.

    ``x.data`` is perturbed in place and restored, so ``f`` may close over
    ``x`` itself (e.g. a weight tensor inside a model). Only the flat
    positions in ``coords`` are computed when given; the rest stay 0.
    """
    grad = np.zeros_like(x.data)
    flat = x.data.reshape(-1)
    grad_flat = grad.reshape(-1)
    positions = range(flat.size) if coords is None else coords
    with no_grad():
        for pos in positions:
            original = flat[pos]
            flat[pos] = original + h
            f_plus = _scalar(f(x))
            flat[pos] = original - h
            f_minus = _scalar(f(x))
            flat[pos] = original
            grad_flat[pos] = (f_plus - f_minus) / (2.0 * h)
    return grad


def grad_check(f: Callable[[Tensor], Tensor], x: Tensor, h: float = 1e-5,
               max_coords: Optional[int] = None, seed: int = 0) -> float:
    """
    Max relative error between the analytic gradient of ``f`` at ``x`` and
    central differences: max_i |a_i - n_i| / max(1, |a_i|).

    ``max_coords`` limits the check to a seeded random subset of coordinates
    for large inputs such as images or weight matrices.
    """
    if x.dtype != np.float64:
        raise ContractError(f"gradient checking needs float64 input, got {x.dtype}")
    x.requires_grad = True
    x.grad = None
    out = f(x)
    if out.size != 1:
        raise ContractError(f"grad_check needs a scalar function, got output shape {out.shape}")
    out.backward()
    analytic = x.grad if x.grad is not None else np.zeros_like(x.data)

    coords = None
    if max_coords is not None and max_coords < x.size:
        coords = np.random.default_rng(seed).choice(x.size, size=max_coords, replace=False)
    numeric = numerical_gradient(f, x, h, coords)

    a = analytic.reshape(-1)
    n = numeric.reshape(-1)
    if coords is not None:
        a, n = a[coords], n[coords]
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - n) / np.maximum(1.0, np.abs(a))))


def _scalar(t: Tensor) -> float:
    if t.size != 1:
        raise ContractError(f"grad_check needs a scalar function, got output shape {t.shape}")
    return float(t.data.reshape(-1)[0])

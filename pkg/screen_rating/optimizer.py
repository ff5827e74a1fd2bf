"""
Adam and global-norm gradient clipping.

    m_t = b1 m_{t-1} + (1 - b1) g
    v_t = b2 v_{t-1} + (1 - b2) g^2
    w_t = w_{t-1} - lr * (m_t / (1 - b1^t)) / (sqrt(v_t / (1 - b2^t)) + eps)
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import CheckpointError, ConfigurationError, DimensionError
from .tensor import Tensor


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros_like(cls, w: np.ndarray) -> "AdamState":
        return cls(np.zeros_like(w), np.zeros_like(w), 0)


def adam_step(w: np.ndarray, grad: np.ndarray, state: AdamState, lr: float,
              beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> Tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update; returns new arrays, inputs untouched"""
    if state.m.shape != w.shape or state.v.shape != w.shape or grad.shape != w.shape:
        raise DimensionError(
            f"Adam shapes differ: w {w.shape}, grad {grad.shape}, "
            f"m {state.m.shape}, v {state.v.shape}")
    t = state.t + 1
    m = beta1 * state.m + (1.0 - beta1) * grad
    v = beta2 * state.v + (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1 ** t)
    v_hat = v / (1.0 - beta2 ** t)
    updated = w - lr * m_hat / (np.sqrt(v_hat) + eps)
    return updated.astype(w.dtype, copy=False), AdamState(m, v, t)


@dataclass
class ClipResult:
    grads: List[np.ndarray]
    norm: float     # global L2 norm before clipping
    clipped: bool


def global_norm(grads: Sequence[np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g.astype(np.float64) ** 2)) for g in grads)))


def clip_gradients(grads: Sequence[np.ndarray], max_norm: float) -> ClipResult:
    """Scale all gradients by max_norm / g when the global norm g exceeds max_norm"""
    if max_norm <= 0:
        raise ConfigurationError(f"max_norm must be positive, got {max_norm}")
    norm = global_norm(grads)
    if norm > max_norm:
        scale = max_norm / norm
        return ClipResult([g * scale for g in grads], norm, True)
    return ClipResult([g for g in grads], norm, False)


class Adam:
    """Adam over a named parameter set; parameters are updated in place"""

    def __init__(self, params: Dict[str, Tensor], lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        if lr < 0:
            raise ConfigurationError(f"learning rate must be non-negative, got {lr}")
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.state: Dict[str, AdamState] = {
            name: AdamState.zeros_like(p.data) for name, p in params.items()
        }

    def step(self, grads: Optional[Dict[str, np.ndarray]] = None) -> None:
        """Apply one update; ``grads`` overrides ``param.grad`` (used after clipping)"""
        for name, param in self.params.items():
            grad = grads[name] if grads is not None else param.grad
            if grad is None:
                grad = np.zeros_like(param.data)
            updated, self.state[name] = adam_step(
                param.data, grad, self.state[name], self.lr, self.beta1, self.beta2, self.eps)
            param.data[...] = updated

    def zero_grad(self) -> None:
        for param in self.params.values():
            param.grad = None

    def state_arrays(self) -> Dict[str, np.ndarray]:
        arrays = {}
        for name, st in self.state.items():
            arrays[f"{name}::m"] = st.m
            arrays[f"{name}::v"] = st.v
        return arrays

    @property
    def step_count(self) -> int:
        return max((st.t for st in self.state.values()), default=0)

    def load_state_arrays(self, arrays: Dict[str, np.ndarray], step: int) -> None:
        """Restore moments written by ``state_arrays``; every parameter must be present"""
        missing = sorted(name for name in self.state
                         if f"{name}::m" not in arrays or f"{name}::v" not in arrays)
        if missing:
            raise CheckpointError(f"optimizer state is missing moments for {missing[:5]}")
        restored = {}
        for name, param in self.params.items():
            m = np.array(arrays[f"{name}::m"], dtype=param.data.dtype)
            v = np.array(arrays[f"{name}::v"], dtype=param.data.dtype)
            if m.shape != param.shape or v.shape != param.shape:
                raise DimensionError(
                    f"optimizer moments for {name} are {m.shape}/{v.shape}, "
                    f"parameter is {param.shape}")
            restored[name] = AdamState(m, v, step)
        self.state = restored

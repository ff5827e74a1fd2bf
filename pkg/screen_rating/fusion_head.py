"""
Fusion and Rating Head
======================
    u     = [v, t, v * t, |v - t|]          (4d)
    h     = act(W_1 u + b_1)                (hidden)
    y_hat = W_2 dropout(h) + b_2            (scalar, unclamped)

There is no learned gate; the "gating" is the elementwise product and
absolute difference blocks that expose agreement between v and t.
"""

import logging
from typing import Optional

import numpy as np

from .activations import activate
from .config import FusionConfig
from .errors import DimensionError
from .nn import Linear, Module
from .tensor import Tensor, abs_, concat, dropout, mul, reshape, sub

logger = logging.getLogger(__name__)


def fuse(v: Tensor, t: Tensor) -> Tensor:
    """concat(v, t, v*t, |v-t|) along the last axis"""
    if v.shape != t.shape:
        raise DimensionError(
            f"image width {v.shape[-1] if v.ndim else 0} and text width "
            f"{t.shape[-1] if t.ndim else 0} must match (shapes {v.shape} vs {t.shape})")
    return concat([v, t, mul(v, t), abs_(sub(v, t))], axis=-1)


class FusionHead(Module):
    def __init__(self, cfg: FusionConfig, rng: np.random.Generator, dtype=np.float64):
        super().__init__()
        self.cfg = cfg
        self.hidden = self.add_module(
            "hidden", Linear(4 * cfg.embed_dim, cfg.hidden_dim, rng, dtype=dtype))
        self.output = self.add_module("output", Linear(cfg.hidden_dim, 1, rng, dtype=dtype))

    def fusion_forward(self, u: Tensor) -> Tensor:
        if u.shape[-1] != 4 * self.cfg.embed_dim:
            raise DimensionError(
                f"fused width {u.shape[-1]} != 4 x embed_dim ({4 * self.cfg.embed_dim})")
        return activate(self.hidden(u), self.cfg.activation)

    def predict_rating(self, h: Tensor, train_mode: bool = False,
                       rng: Optional[np.random.Generator] = None) -> Tensor:
        """[..., hidden] -> [...]; a single hidden vector gives a 0-d tensor"""
        h = dropout(h, self.cfg.dropout, rng, train_mode)
        y = self.output(h)
        return reshape(y, y.shape[:-1])

    def __call__(self, v: Tensor, t: Tensor, train_mode: bool = False,
                 rng: Optional[np.random.Generator] = None) -> Tensor:
        return self.predict_rating(self.fusion_forward(fuse(v, t)), train_mode, rng)


def fusion_forward(u: Tensor, head: FusionHead) -> Tensor:
    return head.fusion_forward(u)


def predict_rating(h: Tensor, head: FusionHead, train_mode: bool = False,
                   rng: Optional[np.random.Generator] = None) -> Tensor:
    return head.predict_rating(h, train_mode, rng)

"""
Rating Model
============
image [B, 3, S, S] -> v [B, d]  \
                                  fuse -> W_1, act -> dropout -> W_2 -> y_hat [B]
tokens [B, L]      -> t [B, d]  /
"""

import logging
from typing import Dict, Optional

import numpy as np

from .config import ModelConfig
from .fusion_head import FusionHead
from .image_encoder import ImageEncoder
from .nn import Module
from .tensor import Tensor
from .text_encoder import build_text_encoder
from .tokenizer import TokenBatch

logger = logging.getLogger(__name__)


def model_dtype(cfg: ModelConfig):
    return np.float32 if cfg.precision == "float32" else np.float64


class RatingModel(Module):
    """
    Full image + text regressor.

    Components are registered in a fixed order (image, text, head) with
    the seed's generator, so one seed always gives the same weights.
    """

    def __init__(self, cfg: ModelConfig, vocab_size: int):
        super().__init__()
        self.cfg = cfg
        dtype = model_dtype(cfg)
        text_cfg = cfg.text.model_copy(update={"vocab_size": vocab_size})
        rng = np.random.default_rng(cfg.seed)
        self.image_encoder = self.add_module("image", ImageEncoder(cfg.image, rng, dtype))
        self.text_encoder = self.add_module(
            "text", build_text_encoder(text_cfg, cfg.text_encoder, dtype=dtype, rng=rng))
        self.head = self.add_module("head", FusionHead(cfg.fusion, rng, dtype))
        self.dtype = dtype

    def __call__(self, images: Tensor, tokens: TokenBatch, training: bool = False,
                 rng: Optional[np.random.Generator] = None) -> Tensor:
        v = self.image_encoder(images)
        t = self.text_encoder(tokens)
        return self.head(v, t, train_mode=training, rng=rng)

    forward = __call__


def count_parameters(model: RatingModel) -> Dict[str, int]:
    """Parameter totals per component plus the overall sum"""
    counts = {
        "image_encoder": model.image_encoder.num_parameters(),
        "text_encoder": model.text_encoder.num_parameters(),
        "fusion_head": model.head.num_parameters(),
    }
    counts["total"] = sum(counts.values())
    return counts


def build_model(cfg: ModelConfig, vocab_size: int) -> RatingModel:
    model = RatingModel(cfg, vocab_size)
    counts = count_parameters(model)
    logger.info("Model built: %d parameters (image %d, text %d, head %d)",
                counts["total"], counts["image_encoder"], counts["text_encoder"],
                counts["fusion_head"])
    return model

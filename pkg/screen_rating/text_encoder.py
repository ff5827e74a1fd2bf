"""
Text Encoders
=============
Transformer encoder producing the text vector t:

    tokens -> embeddings + learned positions
           -> N x [self-attention + residual + LayerNorm,
                   feed-forward + residual + LayerNorm]
           -> mask-aware mean over real tokens
           -> linear projection (W_t, b_t) -> LayerNorm

``SimpleRecurrentEncoder`` is the recurrent baseline used by the component
ablation; it shares the pooling and projection tail.
"""

import logging
from typing import Optional

import numpy as np

from .activations import ActivationKind, activate
from .config import TextEncoderConfig
from .errors import ConfigurationError, DimensionError
from .nn import LayerNorm, Linear, Module, fan_in_normal
from .tensor import (Tensor, add, concat, embedding, getitem, matmul, mul, reshape, softmax,
                     sum_, tanh, transpose)
from .tokenizer import TokenBatch

logger = logging.getLogger(__name__)

# Additive attention bias for padded keys; exp() of it underflows to exactly 0
_MASKED = -1e9


def mask_mean_pool(states: Tensor, mask: np.ndarray) -> Tensor:
    """
    Mean of ``states`` [B, L, D] over positions where ``mask`` [B, L] is 1.
    Rows with no real tokens pool to the zero vector.
    """
    mask = np.asarray(mask, dtype=states.dtype)
    if mask.shape != states.shape[:2]:
        raise DimensionError(f"mask {mask.shape} does not match states {states.shape[:2]}")
    counts = np.maximum(mask.sum(axis=1, keepdims=True), 1.0)
    summed = sum_(mul(states, Tensor(mask[..., None], dtype=states.dtype)), axis=1)
    return mul(summed, Tensor(1.0 / counts, dtype=states.dtype))


class TransformerLayer(Module):
    """Post-norm encoder layer (attention, then feed-forward)"""

    def __init__(self, width: int, heads: int, ff_width: int, rng: np.random.Generator,
                 dtype=np.float64):
        super().__init__()
        self.width = width
        self.heads = heads
        self.head_dim = width // heads
        self.query = self.add_module("attention.query", Linear(width, width, rng, dtype=dtype))
        self.key = self.add_module("attention.key", Linear(width, width, rng, dtype=dtype))
        self.value = self.add_module("attention.value", Linear(width, width, rng, dtype=dtype))
        self.output = self.add_module("attention.output", Linear(width, width, rng, dtype=dtype))
        self.attention_norm = self.add_module("attention_norm", LayerNorm(width, dtype=dtype))
        self.ff_in = self.add_module("ff.input", Linear(width, ff_width, rng, dtype=dtype))
        self.ff_out = self.add_module("ff.output", Linear(ff_width, width, rng, dtype=dtype))
        self.ff_norm = self.add_module("ff_norm", LayerNorm(width, dtype=dtype))

    def _split_heads(self, x: Tensor) -> Tensor:
        batch, length, _ = x.shape
        return transpose(reshape(x, (batch, length, self.heads, self.head_dim)), (0, 2, 1, 3))

    def __call__(self, x: Tensor, key_bias: np.ndarray) -> Tensor:
        batch, length, _ = x.shape
        q = self._split_heads(self.query(x))
        k = self._split_heads(self.key(x))
        v = self._split_heads(self.value(x))
        scores = mul(matmul(q, transpose(k, (0, 1, 3, 2))), 1.0 / np.sqrt(self.head_dim))
        attn = softmax(add(scores, Tensor(key_bias, dtype=x.dtype)), axis=-1)
        context = transpose(matmul(attn, v), (0, 2, 1, 3))
        context = reshape(context, (batch, length, self.width))
        x = self.attention_norm(add(x, self.output(context)))
        ff = self.ff_out(activate(self.ff_in(x), ActivationKind.GELU))
        return self.ff_norm(add(x, ff))


class _PooledTextEncoder(Module):
    """Shared projection tail: pooled [B, D] -> LayerNorm(W_t pooled + b_t)"""

    def __init__(self, cfg: TextEncoderConfig, rng: np.random.Generator, dtype=np.float64):
        super().__init__()
        self.cfg = cfg
        self.dtype = dtype

    def _init_tail(self, rng: np.random.Generator) -> None:
        self.projection = self.add_module(
            "projection", Linear(self.cfg.width, self.cfg.output_dim, rng, dtype=self.dtype))
        self.norm = self.add_module("norm", LayerNorm(self.cfg.output_dim, dtype=self.dtype))

    def _check_batch(self, batch: TokenBatch) -> None:
        if batch.length > self.cfg.max_length:
            raise DimensionError(
                f"sequence length {batch.length} exceeds max_length {self.cfg.max_length}")
        if batch.ids.size and batch.ids.max() >= self.cfg.vocab_size:
            raise DimensionError(
                f"token id {int(batch.ids.max())} outside vocabulary of {self.cfg.vocab_size}")

    def contextual(self, batch: TokenBatch) -> Tensor:
        raise NotImplementedError

    def pooled(self, batch: TokenBatch) -> Tensor:
        return mask_mean_pool(self.contextual(batch), batch.attention_mask)

    def project(self, batch: TokenBatch) -> Tensor:
        """Pre-LayerNorm projection W_t pooled + b_t"""
        return self.projection(self.pooled(batch))

    def __call__(self, batch: TokenBatch) -> Tensor:
        return self.norm(self.project(batch))


class TransformerTextEncoder(_PooledTextEncoder):
    def __init__(self, cfg: TextEncoderConfig, rng: np.random.Generator, dtype=np.float64):
        super().__init__(cfg, rng, dtype)
        self.token_embedding = self.add_parameter(
            "embeddings.token",
            fan_in_normal(rng, (cfg.vocab_size, cfg.width), cfg.width, 1.0, dtype))
        self.position_embedding = self.add_parameter(
            "embeddings.position", np.zeros((cfg.max_length, cfg.width), dtype=dtype))
        self.embedding_norm = self.add_module("embeddings.norm", LayerNorm(cfg.width, dtype=dtype))
        self.layers = [
            self.add_module(f"layer{i}",
                            TransformerLayer(cfg.width, cfg.heads, cfg.width * cfg.ff_multiplier,
                                             rng, dtype))
            for i in range(cfg.layers)
        ]
        self.mlm_bias = self.add_parameter("mlm.bias", np.zeros(cfg.vocab_size, dtype=dtype))
        self._init_tail(rng)

    def embed(self, batch: TokenBatch) -> Tensor:
        self._check_batch(batch)
        length = batch.length
        tokens = embedding(self.token_embedding, batch.ids)
        positions = getitem(self.position_embedding, slice(0, length))
        return self.embedding_norm(add(tokens, positions))

    def contextual(self, batch: TokenBatch) -> Tensor:
        """Contextual states H [B, L, D]"""
        return self.hidden_states(batch)[-1]

    def hidden_states(self, batch: TokenBatch):
        """Embedding output followed by every layer output"""
        key_bias = np.where(batch.attention_mask[:, None, None, :] > 0, 0.0, _MASKED)
        h = self.embed(batch)
        states = [h]
        for layer in self.layers:
            h = layer(h, key_bias)
            states.append(h)
        return states

    def mlm_logits(self, states: Tensor) -> Tensor:
        """Vocabulary logits tied to the token embedding: H E^T + b"""
        return add(matmul(states, transpose(self.token_embedding, (1, 0))), self.mlm_bias)


class SimpleRecurrentEncoder(_PooledTextEncoder):
    """Elman recurrence h_t = tanh(x_t W_x + h_{t-1} W_h + b); pads keep the previous state"""

    def __init__(self, cfg: TextEncoderConfig, rng: np.random.Generator, dtype=np.float64):
        super().__init__(cfg, rng, dtype)
        width = cfg.width
        self.token_embedding = self.add_parameter(
            "embeddings.token", fan_in_normal(rng, (cfg.vocab_size, width), width, 1.0, dtype))
        self.input_weight = self.add_parameter(
            "recurrent.input", fan_in_normal(rng, (width, width), width, 1.0, dtype))
        self.hidden_weight = self.add_parameter(
            "recurrent.hidden", np.eye(width, dtype=dtype) * 0.5)
        self.recurrent_bias = self.add_parameter("recurrent.bias", np.zeros(width, dtype=dtype))
        self._init_tail(rng)

    def contextual(self, batch: TokenBatch) -> Tensor:
        self._check_batch(batch)
        size, length = batch.ids.shape
        x = embedding(self.token_embedding, batch.ids)
        mask = batch.attention_mask.astype(self.dtype)
        h = Tensor(np.zeros((size, self.cfg.width), dtype=self.dtype))
        steps = []
        for t in range(length):
            x_t = getitem(x, (slice(None), t, slice(None)))
            candidate = tanh(add(add(matmul(x_t, self.input_weight),
                                     matmul(h, self.hidden_weight)), self.recurrent_bias))
            keep = Tensor(mask[:, t:t + 1], dtype=self.dtype)
            h = add(mul(candidate, keep), mul(h, 1.0 - keep.data))
            steps.append(reshape(h, (size, 1, self.cfg.width)))
        return concat(steps, axis=1)


def build_text_encoder(cfg: TextEncoderConfig, kind: str = "transformer", seed: int = 0,
                       dtype=np.float64, rng: Optional[np.random.Generator] = None):
    rng = rng if rng is not None else np.random.default_rng(seed)
    if kind == "transformer":
        return TransformerTextEncoder(cfg, rng, dtype)
    if kind == "simple-recurrent":
        return SimpleRecurrentEncoder(cfg, rng, dtype)
    raise ConfigurationError(f"Unknown text encoder '{kind}'")


def encode_text(batch: TokenBatch, encoder: _PooledTextEncoder) -> Tensor:
    """[batch, d_t] text vectors"""
    return encoder(batch)

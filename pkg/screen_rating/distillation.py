"""
Distillation Losses
===================
The triple objective used to compress a transformer text encoder:

    L = a_mlm * L_mlm + a_ce * L_ce + a_cos * L_cos

L_mlm  negative log-likelihood of the true token at masked positions
L_ce   cross-entropy between teacher and student distributions, both
       softened by temperature T
L_cos  1 - cosine similarity between student and teacher hidden states

``DistillationDemo`` runs the objective end to end: a frozen random
4-layer teacher and a 2-layer student initialized from every other
teacher layer.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Union

import numpy as np

from .config import DistillWeights, TextEncoderConfig
from .errors import ConfigurationError, DimensionError
from .optimizer import Adam
from .tensor import (Tensor, add, div, gather_last, getitem, log_softmax, mean, mul, neg,
                     no_grad, softmax, sqrt, sum_)
from .text_encoder import TransformerTextEncoder
from .tokenizer import MASK_ID, TokenBatch

logger = logging.getLogger(__name__)


@dataclass
class LossTerm:
    """A scalar loss plus a flag for degenerate inputs"""
    value: Tensor
    degenerate: bool = False
    note: str = ""

    def __float__(self) -> float:
        return float(self.value.data)


Scalar = Union[LossTerm, Tensor, float]


def _as_tensor(x: Scalar) -> Tensor:
    if isinstance(x, LossTerm):
        return x.value
    if isinstance(x, Tensor):
        return x
    return Tensor(float(x))


def mlm_loss(student_log_probs: Tensor, targets: np.ndarray,
             masked_positions: np.ndarray) -> LossTerm:
    """
    Mean NLL over masked positions.

    ``student_log_probs`` is [..., V]; ``targets`` and the boolean
    ``masked_positions`` share its leading shape. An empty mask gives 0 with
    the degenerate flag set.
    """
    targets = np.asarray(targets, dtype=np.int64)
    masked = np.asarray(masked_positions, dtype=bool)
    if targets.shape != student_log_probs.shape[:-1] or masked.shape != targets.shape:
        raise DimensionError(
            f"targets {targets.shape} / mask {masked.shape} must match "
            f"log-prob leading shape {student_log_probs.shape[:-1]}")
    count = int(masked.sum())
    if count == 0:
        logger.warning("mlm_loss called with no masked positions; returning 0")
        return LossTerm(Tensor(0.0, dtype=student_log_probs.dtype), True, "empty mask set")
    picked = gather_last(student_log_probs, np.where(masked, targets, 0))
    weights = Tensor(masked.astype(student_log_probs.dtype) / count, dtype=student_log_probs.dtype)
    return LossTerm(neg(sum_(mul(picked, weights))))


def distill_ce_loss(teacher_logits: Tensor, student_logits: Tensor,
                    temperature: float) -> LossTerm:
    """-sum p_teacher^(T) log p_student^(T), averaged over positions"""
    if temperature <= 0:
        raise ConfigurationError(f"temperature must be positive, got {temperature}")
    if teacher_logits.shape != student_logits.shape:
        raise DimensionError(
            f"teacher logits {teacher_logits.shape} != student logits {student_logits.shape}")
    with no_grad():
        p_teacher = softmax(teacher_logits, axis=-1, temperature=temperature)
    log_p_student = log_softmax(student_logits, axis=-1, temperature=temperature)
    per_position = neg(sum_(mul(log_p_student, Tensor(p_teacher.data)), axis=-1))
    return LossTerm(mean(per_position))


def cosine_loss(h_s: Tensor, h_t: Tensor) -> LossTerm:
    """
    1 - cos(h_s, h_t) along the last axis, averaged over the rest.
    A zero-norm row scores loss 1 and sets the degenerate flag.
    """
    if h_s.shape != h_t.shape:
        raise DimensionError(f"hidden state shapes differ: {h_s.shape} vs {h_t.shape}")
    tiny = np.finfo(h_s.dtype).tiny
    norm_s = h_s.data.reshape(-1, h_s.shape[-1])
    norm_t = h_t.data.reshape(-1, h_t.shape[-1])
    degenerate = bool(np.any(np.linalg.norm(norm_s, axis=-1) == 0)
                      or np.any(np.linalg.norm(norm_t, axis=-1) == 0))
    if degenerate:
        logger.warning("cosine_loss received a zero-norm hidden state")
    dot = sum_(mul(h_s, h_t), axis=-1)
    ns = sqrt(add(sum_(mul(h_s, h_s), axis=-1), tiny))
    nt = sqrt(add(sum_(mul(h_t, h_t), axis=-1), tiny))
    cos = div(dot, mul(ns, nt))
    value = mean(add(neg(cos), 1.0))
    return LossTerm(value, degenerate, "zero-norm hidden state" if degenerate else "")


def triple_loss(mlm: Scalar, ce: Scalar, cos: Scalar, w: DistillWeights) -> Tensor:
    """a_mlm * mlm + a_ce * ce + a_cos * cos"""
    return add(add(mul(_as_tensor(mlm), w.alpha_mlm), mul(_as_tensor(ce), w.alpha_ce)),
               mul(_as_tensor(cos), w.alpha_cos))


# ---------------------------------------------------------------------- #
# Toy teacher -> student experiment
# ---------------------------------------------------------------------- #

@dataclass
class DistillStep:
    step: int
    mlm: float
    ce: float
    cos: float
    total: float

    def as_row(self) -> Dict:
        return {"step": self.step, "mlm": round(self.mlm, 8), "ce": round(self.ce, 8),
                "cos": round(self.cos, 8), "total": round(self.total, 8)}


@dataclass
class DistillationResult:
    curve: List[DistillStep] = field(default_factory=list)
    student: Optional[TransformerTextEncoder] = None


def init_student_from_teacher(student: TransformerTextEncoder,
                              teacher: TransformerTextEncoder) -> None:
    """Copy embeddings, tail and every other teacher layer into the student"""
    teacher_params = teacher.named_parameters()
    stride = max(1, len(teacher.layers) // max(1, len(student.layers)))
    for name, tensor in student.named_parameters().items():
        source = name
        if name.startswith("layer"):
            index, rest = name[len("layer"):].split(".", 1)
            source = f"layer{int(index) * stride}.{rest}"
        if source in teacher_params and teacher_params[source].shape == tensor.shape:
            tensor.data[...] = teacher_params[source].data


class DistillationDemo:
    """
    Frozen random teacher, student trained on the triple loss over random
    token sequences with 15% of real positions masked.
    """

    def __init__(self, weights: DistillWeights = DistillWeights(), vocab_size: int = 64,
                 width: int = 32, heads: int = 4, max_length: int = 12,
                 teacher_layers: int = 4, student_layers: int = 2, seed: int = 0):
        self.weights = weights
        self.seed = seed
        base = dict(vocab_size=vocab_size, width=width, heads=heads, max_length=max_length,
                    output_dim=width)
        rng = np.random.default_rng(seed)
        self.teacher = TransformerTextEncoder(
            TextEncoderConfig(layers=teacher_layers, **base), rng)
        self.student = TransformerTextEncoder(
            TextEncoderConfig(layers=student_layers, **base), rng)
        init_student_from_teacher(self.student, self.teacher)
        self.data_rng = np.random.default_rng(seed + 1)

    def sample_batch(self, batch_size: int):
        cfg = self.student.cfg
        ids = self.data_rng.integers(4, cfg.vocab_size, size=(batch_size, cfg.max_length))
        lengths = self.data_rng.integers(cfg.max_length // 2, cfg.max_length + 1, size=batch_size)
        mask = (np.arange(cfg.max_length)[None, :] < lengths[:, None]).astype(np.int64)
        ids = np.where(mask > 0, ids, 0)
        masked = (self.data_rng.random(ids.shape) < 0.15) & (mask > 0)
        masked[np.arange(batch_size), 0] = True  # at least one target per row
        inputs = np.where(masked, MASK_ID, ids)
        return TokenBatch(inputs, mask), ids, masked

    def step_losses(self, batch: TokenBatch, targets: np.ndarray, masked: np.ndarray):
        with no_grad():
            teacher_states = self.teacher.contextual(batch)
            teacher_logits = self.teacher.mlm_logits(teacher_states)
        student_states = self.student.contextual(batch)
        student_logits = self.student.mlm_logits(student_states)
        l_mlm = mlm_loss(log_softmax(student_logits, axis=-1), targets, masked)
        l_ce = distill_ce_loss(Tensor(teacher_logits.data), student_logits,
                               self.weights.temperature)
        real = batch.attention_mask > 0
        l_cos = cosine_loss(_rows(student_states, real), Tensor(teacher_states.data[real]))
        return l_mlm, l_ce, l_cos

    def run(self, steps: int = 50, batch_size: int = 8, lr: float = 1e-3) -> DistillationResult:
        optimizer = Adam(self.student.named_parameters(), lr=lr)
        result = DistillationResult(student=self.student)
        for step in range(1, steps + 1):
            batch, targets, masked = self.sample_batch(batch_size)
            self.student.zero_grad()
            l_mlm, l_ce, l_cos = self.step_losses(batch, targets, masked)
            total = triple_loss(l_mlm, l_ce, l_cos, self.weights)
            total.backward()
            optimizer.step()
            record = DistillStep(step, float(l_mlm), float(l_ce), float(l_cos), float(total.data))
            result.curve.append(record)
            if step == 1 or step % 10 == 0:
                logger.info("distill step %d: mlm=%.4f ce=%.4f cos=%.4f total=%.4f",
                            step, record.mlm, record.ce, record.cos, record.total)
        return result


def _rows(states: Tensor, real: np.ndarray) -> Tensor:
    """Select [N, D] rows of a [B, L, D] tensor where ``real`` is True"""
    return getitem(states, np.nonzero(real))

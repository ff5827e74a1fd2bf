"""
Training Loop
=============
Per epoch:

    shuffle (seeded) -> for each batch:
        forward (image encoder, text encoder, fuse, fusion layer, head)
        loss = mean (y_hat - y)^2        (or mean |y_hat - y| with loss="mae")
        backward -> global-norm clip at grad_clip -> Adam step
    evaluate on the train and validation splits

The checkpoint with the lowest validation MAE is kept. Without a
validation split the lowest training MAE is used and the result is flagged.

Every kept checkpoint carries the Adam moments and generator state of
its epoch, so ``resume`` continues the run exactly as if it had not stopped.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .checkpoint import Checkpoint
from .config import ModelConfig, with_overrides
from .errors import CheckpointError, ConfigurationError, ContractError, NonFiniteLossError
from .history_logger import HistoryLogger
from .manifest import RATING_MAX, RATING_MIN, Manifest, ScreenSample
from .metrics import MetricsReport, evaluate
from .model import RatingModel, build_model, model_dtype
from .optimizer import Adam, clip_gradients
from .preprocessing import load_image_batch
from .tensor import Tensor, abs_, mean, mul, no_grad, sub
from .tokenizer import TokenBatch, Vocabulary, join_caption, tokenize_batch

logger = logging.getLogger(__name__)

EVAL_BATCH = 32


# ---------------------------------------------------------------------- #
# Target scaling
# ---------------------------------------------------------------------- #

def scale_targets(ratings: np.ndarray, target_scale: str) -> np.ndarray:
    ratings = np.asarray(ratings, dtype=np.float64)
    if target_scale == "minmax":
        return (ratings - RATING_MIN) / (RATING_MAX - RATING_MIN)
    return ratings


def unscale_targets(values: np.ndarray, target_scale: str) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if target_scale == "minmax":
        return values * (RATING_MAX - RATING_MIN) + RATING_MIN
    return values


def clamp_bounds(target_scale: str) -> Tuple[float, float]:
    """Rating bounds [1, 5] expressed on the training scale"""
    low, high = scale_targets(np.array([RATING_MIN, RATING_MAX]), target_scale)
    return float(low), float(high)


# ---------------------------------------------------------------------- #
# Encoded data
# ---------------------------------------------------------------------- #

@dataclass
class EncodedSplit:
    keys: List[str]
    images: np.ndarray          # [N, 3, S, S]
    tokens: TokenBatch
    targets: np.ndarray         # on the training scale
    errors: Dict[str, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.keys)


def build_vocabulary(samples: Sequence[ScreenSample], cfg: ModelConfig) -> Vocabulary:
    return Vocabulary.build((join_caption(s.caption, s.category) for s in samples),
                            max_size=cfg.text.vocab_size)


def encode_samples(manifest: Manifest, samples: Sequence[ScreenSample], vocab: Vocabulary,
                   cfg: ModelConfig) -> EncodedSplit:
    """Decode images and tokenize captions; undecodable images drop their sample"""
    dtype = model_dtype(cfg)
    batch = load_image_batch([manifest.resolve(s) for s in samples], [s.key for s in samples],
                             cfg.image.input_size, cfg.workers)
    kept = set(batch.keys)
    samples = [s for s in samples if s.key in kept]
    if samples:
        images = batch.stacked(dtype)
    else:
        size = cfg.image.input_size
        images = np.zeros((0, 3, size, size), dtype=dtype)
    tokens = tokenize_batch([join_caption(s.caption, s.category) for s in samples],
                            vocab, cfg.text.max_length)
    targets = scale_targets(np.array([s.avg_rating for s in samples]), cfg.target_scale)
    return EncodedSplit([s.key for s in samples], images, tokens, targets, batch.errors)


def predict_split(model: RatingModel, data: EncodedSplit,
                  batch_size: int = EVAL_BATCH) -> np.ndarray:
    """Eval-mode predictions on the training scale, in sample order"""
    outputs = []
    with no_grad():
        for start in range(0, len(data), batch_size):
            rows = np.arange(start, min(start + batch_size, len(data)))
            pred = model(Tensor(data.images[rows]), data.tokens.select(rows), training=False)
            outputs.append(np.asarray(pred.data, dtype=np.float64).reshape(-1))
    return np.concatenate(outputs) if outputs else np.zeros(0)


def score_split(model: RatingModel, data: EncodedSplit, clamp: bool = False,
                target_scale: str = "raw") -> Optional[MetricsReport]:
    if len(data) < 2:
        return None
    bounds = clamp_bounds(target_scale) if clamp else None
    return evaluate(data.targets, predict_split(model, data), clamp=bounds)


# ---------------------------------------------------------------------- #
# Training
# ---------------------------------------------------------------------- #

@dataclass
class EpochRecord:
    epoch: int
    loss: float
    grad_norm: float            # largest pre-clip global norm in the epoch
    train: Optional[MetricsReport]
    val: Optional[MetricsReport]

    def as_rows(self) -> List[Dict]:
        rows = []
        for split, report in (("train", self.train), ("val", self.val)):
            if report is None:
                continue
            row = {"epoch": self.epoch, "split": split, "loss": self.loss,
                   "grad_norm": self.grad_norm}
            row.update(report.to_dict())
            rows.append(row)
        return rows


@dataclass
class TrainingResult:
    checkpoint: Checkpoint
    history: List[EpochRecord]
    best_epoch: int
    flags: List[str] = field(default_factory=list)
    model: Optional[RatingModel] = None     # final-epoch weights

    def history_rows(self) -> List[Dict]:
        return [row for record in self.history for row in record.as_rows()]


def _loss(pred: Tensor, target: Tensor, kind: str) -> Tensor:
    diff = sub(pred, target)
    if kind == "mae":
        return mean(abs_(diff))
    return mean(mul(diff, diff))


class RatingTrainer:
    """
    Owns one model, its optimizer and the seeded generator that drives both
    shuffling and dropout.
    """

    def __init__(self, cfg: ModelConfig, vocab: Vocabulary,
                 history_logger: Optional[HistoryLogger] = None):
        self.cfg = cfg
        self.vocab = vocab
        self.model = build_model(cfg, len(vocab))
        self.params = self.model.named_parameters()
        self.optimizer = Adam(self.params, lr=cfg.learning_rate)
        self.rng = np.random.default_rng(cfg.seed)
        self.history_logger = history_logger
        self.dtype = model_dtype(cfg)
        self.resumed_from: Optional[Checkpoint] = None

    @classmethod
    def from_checkpoint(cls, ckpt: Checkpoint, epochs: int,
                        history_logger: Optional[HistoryLogger] = None) -> "RatingTrainer":
        """
        Pick a run up at ``ckpt.epoch`` with its weights, Adam moments and
        generator state, and train on through epoch ``epochs``.
        """
        if ckpt.rng_state is None or not ckpt.optimizer:
            raise CheckpointError("checkpoint has no optimizer or generator state to resume from")
        if epochs <= ckpt.epoch:
            raise ConfigurationError(
                f"checkpoint is at epoch {ckpt.epoch}; epochs must exceed it, got {epochs}")
        trainer = cls(with_overrides(ckpt.config, epochs=epochs), ckpt.vocab, history_logger)
        trainer.model.load_state_dict(ckpt.weights)
        trainer.optimizer.load_state_arrays(ckpt.optimizer, ckpt.optimizer_step)
        trainer.rng.bit_generator.state = ckpt.rng_state
        trainer.resumed_from = ckpt
        return trainer

    def _snapshot(self, epoch: int) -> Checkpoint:
        optimizer = {k: v.copy() for k, v in self.optimizer.state_arrays().items()}
        return Checkpoint(self.model.state_dict(), self.cfg, self.vocab, epoch,
                          self.rng.bit_generator.state, [], optimizer,
                          self.optimizer.step_count)

    def train_epoch(self, epoch: int, data: EncodedSplit) -> Tuple[float, float]:
        """One pass over ``data``; returns (mean batch loss, max pre-clip norm)"""
        order = self.rng.permutation(len(data))
        losses, max_norm = [], 0.0
        for batch_index, start in enumerate(range(0, len(data), self.cfg.batch_size)):
            rows = order[start:start + self.cfg.batch_size]
            self.model.zero_grad()
            pred = self.model(Tensor(data.images[rows]), data.tokens.select(rows),
                              training=True, rng=self.rng)
            loss = _loss(pred, Tensor(data.targets[rows], dtype=self.dtype), self.cfg.loss)
            value = float(loss.data)
            if not np.isfinite(value):
                raise NonFiniteLossError(epoch, batch_index, [data.keys[i] for i in rows])
            loss.backward()

            names = list(self.params)
            grads = [self.params[n].grad if self.params[n].grad is not None
                     else np.zeros_like(self.params[n].data) for n in names]
            clipped = clip_gradients(grads, self.cfg.grad_clip)
            self.optimizer.step(dict(zip(names, clipped.grads)))
            losses.append(value)
            max_norm = max(max_norm, clipped.norm)
        return float(np.mean(losses)), max_norm

    def fit(self, train_data: EncodedSplit, val_data: EncodedSplit) -> TrainingResult:
        if len(train_data) == 0:
            raise ContractError("training split is empty")
        flags = []
        if len(val_data) < 2:
            flags.append("no_validation")
            logger.warning("Validation split has %d usable samples; selecting on training MAE",
                           len(val_data))

        history: List[EpochRecord] = []
        prior_rows: List[Dict] = []
        start = 0
        best: Optional[Checkpoint] = None
        best_score = np.inf
        if self.resumed_from is not None:
            start = self.resumed_from.epoch
            prior_rows = [row for row in self.resumed_from.history if row["epoch"] <= start]
            best, best_score = self.resumed_from, _selection_score(prior_rows, start)
            if self.history_logger is not None:
                self.history_logger.log_many(prior_rows)
            logger.info("Resuming at epoch %d of %d", start, self.cfg.epochs)

        for epoch in range(start + 1, self.cfg.epochs + 1):
            loss, grad_norm = self.train_epoch(epoch, train_data)
            train_report = score_split(self.model, train_data, target_scale=self.cfg.target_scale)
            val_report = score_split(self.model, val_data, target_scale=self.cfg.target_scale)
            record = EpochRecord(epoch, loss, grad_norm, train_report, val_report)
            history.append(record)
            if self.history_logger is not None:
                self.history_logger.log_many(record.as_rows())

            selector = val_report if val_report is not None else train_report
            score = selector.mae if selector is not None else loss
            if best is None or score < best_score:
                best_score = score
                best = self._snapshot(epoch)

            logger.info(
                "epoch %d/%d loss=%.5f grad_norm=%.4f train_mae=%s val_mae=%s",
                epoch, self.cfg.epochs, loss, grad_norm,
                f"{train_report.mae:.5f}" if train_report else "n/a",
                f"{val_report.mae:.5f}" if val_report else "n/a",
            )

        rows = prior_rows + [row for record in history for row in record.as_rows()]
        checkpoint = replace(best, config=self.cfg, history=rows)
        return TrainingResult(checkpoint, history, best.epoch, flags, self.model)


def _selection_score(rows: List[Dict], epoch: int) -> float:
    """The score ``fit`` selected on at ``epoch``: val MAE, else train MAE, else loss"""
    at_epoch = {row["split"]: row for row in rows if row["epoch"] == epoch}
    for split in ("val", "train"):
        if split in at_epoch and at_epoch[split].get("mae") is not None:
            return float(at_epoch[split]["mae"])
    return float(next(iter(at_epoch.values()))["loss"]) if at_epoch else np.inf


def _encode_for_training(manifest: Manifest, cfg: ModelConfig,
                         vocab: Optional[Vocabulary] = None
                         ) -> Tuple[Vocabulary, EncodedSplit, EncodedSplit]:
    if len(manifest) == 0:
        raise ContractError("cannot train on an empty manifest")
    train_samples = manifest.split("train")
    if not train_samples:
        raise ContractError("manifest has no samples in the train split")
    if vocab is None:
        vocab = build_vocabulary(train_samples, cfg)
    train_data = encode_samples(manifest, train_samples, vocab, cfg)
    val_data = encode_samples(manifest, manifest.split("val"), vocab, cfg)
    logger.info("Training on %d samples (%d validation), vocabulary %d tokens",
                len(train_data), len(val_data), len(vocab))
    return vocab, train_data, val_data


def train(manifest: Manifest, cfg: ModelConfig,
          history_logger: Optional[HistoryLogger] = None) -> TrainingResult:
    """Train on the manifest's train split, selecting on its validation split"""
    vocab, train_data, val_data = _encode_for_training(manifest, cfg)
    trainer = RatingTrainer(cfg, vocab, history_logger)
    return trainer.fit(train_data, val_data)


def resume(ckpt: Checkpoint, manifest: Manifest, epochs: int,
           history_logger: Optional[HistoryLogger] = None) -> TrainingResult:
    """Continue a checkpointed run to ``epochs`` with its own vocabulary and config"""
    _, train_data, val_data = _encode_for_training(manifest, ckpt.config, ckpt.vocab)
    trainer = RatingTrainer.from_checkpoint(ckpt, epochs, history_logger)
    return trainer.fit(train_data, val_data)


# ---------------------------------------------------------------------- #
# Evaluation and prediction with a saved checkpoint
# ---------------------------------------------------------------------- #

def evaluate_checkpoint(ckpt: Checkpoint, manifest: Manifest, split: Optional[str] = None,
                        clamp: bool = False) -> Tuple[str, MetricsReport]:
    """
    Score a checkpoint on ``split``, or on the first non-empty of
    test, val, train when no split is named.
    """
    if split is None:
        split, samples = manifest.first_nonempty(min_size=2)
    else:
        samples = manifest.split(split)
    data = encode_samples(manifest, samples, ckpt.vocab, ckpt.config)
    if len(data) < 2:
        raise ContractError(f"split '{split}' has {len(data)} usable samples; need at least 2")
    report = score_split(ckpt.build_model(), data, clamp, ckpt.config.target_scale)
    return split, report


def predict(ckpt: Checkpoint, manifest: Manifest,
            samples: Optional[Sequence[ScreenSample]] = None) -> List[Dict]:
    """
    Rows of (image_path, predicted, displayed). ``predicted`` is the raw
    head output on the 1-5 scale; ``displayed`` is clamped to [1, 5].
    """
    samples = list(manifest.samples if samples is None else samples)
    data = encode_samples(manifest, samples, ckpt.vocab, ckpt.config)
    predicted = unscale_targets(predict_split(ckpt.build_model(), data),
                                ckpt.config.target_scale)
    rows = []
    for key, value in zip(data.keys, predicted):
        rows.append({"image_path": key, "predicted": float(value),
                     "displayed": float(np.clip(value, RATING_MIN, RATING_MAX))})
    for key, error in data.errors.items():
        logger.warning("No prediction for %s: %s", key, error)
    return rows

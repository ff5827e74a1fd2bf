"""
Checkpoint files.

A checkpoint is an ``.npz`` archive: one array per parameter under its
canonical name (``image.stem.weight``, ``head.output.bias``, ...) plus a
``__meta__`` JSON string holding the format version, model config,
vocabulary, epoch, RNG state and training history. Adam moments are
stored beside the weights under ``optim::<parameter>::m`` and ``::v``
so a run can be resumed exactly where the checkpoint was taken.
"""

import json
import logging
import zipfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
from pydantic import ValidationError

from .config import ModelConfig
from .errors import CheckpointError
from .model import RatingModel
from .tokenizer import Vocabulary

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
META_KEY = "__meta__"
OPTIM_PREFIX = "optim::"


@dataclass
class Checkpoint:
    weights: Dict[str, np.ndarray]
    config: ModelConfig
    vocab: Vocabulary
    epoch: int = 0
    rng_state: Optional[Dict] = None
    history: List[Dict] = field(default_factory=list)
    optimizer: Dict[str, np.ndarray] = field(default_factory=dict)
    optimizer_step: int = 0

    @classmethod
    def from_model(cls, model: RatingModel, vocab: Vocabulary, epoch: int,
                   rng_state: Optional[Dict] = None,
                   history: Optional[List[Dict]] = None) -> "Checkpoint":
        return cls(model.state_dict(), model.cfg, vocab, epoch, rng_state, list(history or []))

    def build_model(self) -> RatingModel:
        model = RatingModel(self.config, len(self.vocab))
        model.load_state_dict(self.weights)
        return model


def save_checkpoint(ckpt: Checkpoint, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = {
        "format_version": FORMAT_VERSION,
        "config": ckpt.config.model_dump(mode="json"),
        "vocab": ckpt.vocab.tokens(),
        "epoch": ckpt.epoch,
        "rng_state": ckpt.rng_state,
        "history": ckpt.history,
        "optimizer_step": ckpt.optimizer_step,
    }
    arrays = dict(ckpt.weights)
    reserved = [k for k in arrays if k == META_KEY or k.startswith(OPTIM_PREFIX)]
    if reserved:
        raise CheckpointError(f"parameter names {reserved[:5]} are reserved")
    arrays.update((OPTIM_PREFIX + k, v) for k, v in ckpt.optimizer.items())
    arrays[META_KEY] = np.array(json.dumps(meta))
    with open(path, "wb") as f:
        np.savez(f, **arrays)
    logger.info("Saved checkpoint (epoch %d) to %s", ckpt.epoch, path)
    return path


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    """Read a checkpoint; unknown versions and malformed files raise CheckpointError"""
    path = Path(path)
    try:
        with np.load(path, allow_pickle=False) as archive:
            arrays = {name: archive[name] for name in archive.files}
    except (OSError, ValueError, zipfile.BadZipFile) as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e

    if META_KEY not in arrays:
        raise CheckpointError(f"{path} has no {META_KEY} block")
    try:
        meta = json.loads(str(arrays.pop(META_KEY)))
    except json.JSONDecodeError as e:
        raise CheckpointError(f"{path} has an unreadable {META_KEY} block: {e}") from e

    version = meta.get("format_version")
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"{path} has format_version {version!r}; this build reads version {FORMAT_VERSION}")
    try:
        config = ModelConfig.model_validate(meta["config"])
        vocab = Vocabulary.from_tokens(meta["vocab"])
    except (KeyError, ValidationError, ValueError) as e:
        raise CheckpointError(f"{path} has an invalid config or vocabulary: {e}") from e

    optim_keys = [k for k in arrays if k.startswith(OPTIM_PREFIX)]
    optimizer = {k[len(OPTIM_PREFIX):]: arrays.pop(k) for k in optim_keys}
    ckpt = Checkpoint(arrays, config, vocab, int(meta.get("epoch", 0)),
                      meta.get("rng_state"), list(meta.get("history", [])),
                      optimizer, int(meta.get("optimizer_step", 0)))
    # Validate the closed key set now rather than at first use
    ckpt.build_model()
    return ckpt

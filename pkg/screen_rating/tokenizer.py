"""
Word-level tokenizer built from the training captions.

Text is lowercased and split on anything that is not a letter or digit;
the literal ``[SEP]`` marker survives as its own token. Ids 0-3 are
reserved for PAD, UNK, MASK and SEP.
"""

import re
from collections import Counter
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError

PAD, UNK, MASK, SEP = "[PAD]", "[UNK]", "[MASK]", "[SEP]"
RESERVED = (PAD, UNK, MASK, SEP)
PAD_ID, UNK_ID, MASK_ID, SEP_ID = 0, 1, 2, 3

_TOKEN_RE = re.compile(r"\[sep\]|[^\W_]+")


def split_words(text: str) -> List[str]:
    return [SEP if w == "[sep]" else w for w in _TOKEN_RE.findall(text.lower())]


def join_caption(caption: str, category: str) -> str:
    """Caption and category travel to the text encoder as one sequence"""
    return f"{caption} {SEP} {category}"


class Vocabulary:
    """token <-> id map; PAD is always id 0"""

    def __init__(self, token_to_id: Mapping[str, int]):
        mapping = dict(token_to_id)
        for token, expected in zip(RESERVED, (PAD_ID, UNK_ID, MASK_ID, SEP_ID)):
            if mapping.setdefault(token, expected) != expected:
                raise ConfigurationError(f"reserved token {token} must have id {expected}")
        ids = list(mapping.values())
        if len(set(ids)) != len(ids):
            raise ConfigurationError("vocabulary ids must be unique")
        if min(ids) < 0:
            raise ConfigurationError("vocabulary ids must be non-negative")
        self.token_to_id: Dict[str, int] = mapping
        self.id_to_token: Dict[int, str] = {i: t for t, i in mapping.items()}

    @classmethod
    def build(cls, texts: Iterable[str], max_size: int = 8192) -> "Vocabulary":
        """Top-K tokens by frequency, ties broken alphabetically"""
        counts = Counter(w for text in texts for w in split_words(text) if w not in RESERVED)
        ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
        room = max(0, max_size - len(RESERVED))
        mapping = {t: i for i, t in enumerate(RESERVED)}
        for offset, (token, _) in enumerate(ranked[:room]):
            mapping[token] = len(RESERVED) + offset
        return cls(mapping)

    @classmethod
    def from_tokens(cls, tokens: Sequence[str]) -> "Vocabulary":
        """Inverse of ``tokens()``; used when reloading checkpoints"""
        return cls({t: i for i, t in enumerate(tokens) if t})

    def tokens(self) -> List[str]:
        return [self.id_to_token.get(i, "") for i in range(len(self))]

    def __len__(self) -> int:
        return max(self.id_to_token) + 1

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def lookup(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)


@dataclass
class TokenBatch:
    ids: np.ndarray             # [batch, L] int64
    attention_mask: np.ndarray  # [batch, L] 0/1

    def __post_init__(self):
        if self.ids.shape != self.attention_mask.shape or self.ids.ndim != 2:
            raise ConfigurationError(
                f"ids {self.ids.shape} and mask {self.attention_mask.shape} must be equal 2-D shapes"
            )

    @property
    def length(self) -> int:
        return self.ids.shape[1]

    def __len__(self) -> int:
        return self.ids.shape[0]

    def select(self, rows) -> "TokenBatch":
        return TokenBatch(self.ids[rows], self.attention_mask[rows])


def tokenize(text: str, vocab: Vocabulary, max_length: int) -> TokenBatch:
    """One row: ids truncated or right-padded to ``max_length``"""
    if max_length <= 0:
        raise ConfigurationError(f"max_length must be positive, got {max_length}")
    ids = [vocab.lookup(w) for w in split_words(text)][:max_length]
    row = np.full((1, max_length), PAD_ID, dtype=np.int64)
    mask = np.zeros((1, max_length), dtype=np.int64)
    row[0, :len(ids)] = ids
    mask[0, :len(ids)] = 1
    return TokenBatch(row, mask)


def tokenize_batch(texts: Sequence[str], vocab: Vocabulary, max_length: int) -> TokenBatch:
    rows = [tokenize(t, vocab, max_length) for t in texts]
    if not rows:
        empty = np.zeros((0, max_length), dtype=np.int64)
        return TokenBatch(empty, empty.copy())
    return TokenBatch(np.concatenate([r.ids for r in rows]),
                      np.concatenate([r.attention_mask for r in rows]))

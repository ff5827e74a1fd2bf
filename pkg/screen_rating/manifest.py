"""
Manifest Loading
================
A manifest indexes the rated screens. Two encodings carry the same five
fields:

    csv    header: image_path,caption,category,avg_rating,num_ratings
    jsonl  one object per line with the same keys

Image paths are resolved against the manifest's directory. Rows that break
a sample invariant are rejected and tallied in a ``LoadReport``; they never
abort the load. A missing column is structural and raises ``SchemaError``.
"""

import csv
import hashlib
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import ConfigurationError, ContractError, SchemaError

logger = logging.getLogger(__name__)

FIELDS = ("image_path", "caption", "category", "avg_rating", "num_ratings")
SPLITS = ("train", "val", "test")
RATING_MIN, RATING_MAX = 1.0, 5.0

# Train / validation fractions; the remainder is test
SPLIT_FRACTIONS = (0.8, 0.1)


class ScreenSample(BaseModel):
    """One rated screen"""
    model_config = ConfigDict(frozen=True, str_strip_whitespace=True)

    image_path: str = Field(min_length=1)
    caption: str = ""
    category: str = ""
    avg_rating: float = Field(ge=RATING_MIN, le=RATING_MAX, allow_inf_nan=False)
    num_ratings: int = Field(default=0, ge=0)

    @field_validator("caption", "category", mode="before")
    @classmethod
    def _blank_text(cls, value):
        return "" if value is None else value

    @field_validator("num_ratings", mode="before")
    @classmethod
    def _blank_count(cls, value):
        return 0 if value is None or value == "" else value

    @property
    def key(self) -> str:
        return self.image_path

    def as_row(self) -> Dict:
        return {
            "image_path": self.image_path,
            "caption": self.caption,
            "category": self.category,
            "avg_rating": self.avg_rating,
            "num_ratings": self.num_ratings,
        }


@dataclass
class LoadReport:
    total: int = 0
    accepted: int = 0
    rejected: int = 0
    reasons: Counter = field(default_factory=Counter)
    rejections: List[Dict] = field(default_factory=list)

    def reject(self, line: int, reason: str, detail: str) -> None:
        self.rejected += 1
        self.reasons[reason] += 1
        self.rejections.append({"line": line, "reason": reason, "detail": detail})

    def to_dict(self) -> Dict:
        return {
            "total": self.total,
            "accepted": self.accepted,
            "rejected": self.rejected,
            "reasons": dict(sorted(self.reasons.items())),
            "rejections": self.rejections,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def assign_split(key: str, seed: int = 0) -> str:
    """80/10/10 split from sha256(seed, key); depends on nothing else"""
    digest = hashlib.sha256(f"{seed}\x00{key}".encode("utf-8")).digest()
    fraction = int.from_bytes(digest[:8], "big") / 2 ** 64
    if fraction < SPLIT_FRACTIONS[0]:
        return "train"
    if fraction < SPLIT_FRACTIONS[0] + SPLIT_FRACTIONS[1]:
        return "val"
    return "test"


@dataclass
class Manifest:
    samples: List[ScreenSample]
    source: Optional[Path] = None
    seed: int = 0
    splits: Dict[str, str] = field(default_factory=dict)
    report: LoadReport = field(default_factory=LoadReport)

    def __post_init__(self):
        if not self.splits:
            self.splits = {s.key: assign_split(s.key, self.seed) for s in self.samples}

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def root(self) -> Path:
        return self.source.parent if self.source is not None else Path(".")

    def resolve(self, sample: ScreenSample) -> Path:
        path = Path(sample.image_path)
        return path if path.is_absolute() else self.root / path

    def split(self, name: str) -> List[ScreenSample]:
        if name not in SPLITS:
            raise ConfigurationError(f"Unknown split '{name}'. Expected one of: {', '.join(SPLITS)}")
        return [s for s in self.samples if self.splits[s.key] == name]

    def split_sizes(self) -> Dict[str, int]:
        counts = Counter(self.splits[s.key] for s in self.samples)
        return {name: counts.get(name, 0) for name in SPLITS}

    def first_nonempty(self, order: Tuple[str, ...] = ("test", "val", "train"),
                       min_size: int = 1) -> Tuple[str, List[ScreenSample]]:
        """First split in ``order`` holding at least ``min_size`` samples"""
        for name in order:
            samples = self.split(name)
            if len(samples) >= min_size:
                return name, samples
        raise ContractError(f"no split holds {min_size} or more samples")


def _classify(error: ValidationError) -> str:
    kinds = {e["type"] for e in error.errors()}
    if kinds & {"greater_than_equal", "less_than_equal", "greater_than", "less_than"}:
        return "range"
    return "unparsable"


def _iter_csv(path: Path) -> Iterable[Tuple[int, Union[Dict, str]]]:
    try:
        with open(path, "r", newline="", encoding="utf-8") as f:
            reader = csv.DictReader(f)
            columns = reader.fieldnames or []
            for name in FIELDS:
                if name not in columns:
                    raise SchemaError(f"manifest {path} is missing required column '{name}'")
            for row in reader:
                yield reader.line_num, {k: row.get(k) for k in FIELDS}
    except UnicodeDecodeError as e:
        raise SchemaError(
            f"manifest {path} is not valid UTF-8: {e.reason} at byte {e.start}") from e


def _iter_jsonl(path: Path) -> Iterable[Tuple[int, Union[Dict, str]]]:
    with open(path, "rb") as f:
        for line_num, raw in enumerate(f, start=1):
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as e:
                yield line_num, f"not valid UTF-8: {e.reason}"
                continue
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                yield line_num, f"invalid JSON: {e.msg}"
                continue
            if not isinstance(obj, dict):
                yield line_num, "line is not a JSON object"
                continue
            for name in FIELDS:
                if name not in obj:
                    raise SchemaError(
                        f"manifest {path} line {line_num} is missing required field '{name}'")
            yield line_num, {k: obj[k] for k in FIELDS}


def infer_schema(path: Path) -> str:
    return "jsonl" if path.suffix.lower() in (".jsonl", ".ndjson") else "csv"


def load_manifest(path: Union[str, Path], schema: Optional[str] = None, seed: int = 0,
                  check_images: bool = True) -> Manifest:
    """
    Read and validate a manifest.

    Rejection reasons: ``range`` (rating outside [1, 5] or negative count),
    ``unparsable`` (non-numeric or non-finite value, malformed line) and
    ``missing_image`` (image file absent when ``check_images``).
    """
    path = Path(path)
    schema = schema or infer_schema(path)
    if schema not in ("csv", "jsonl"):
        raise ConfigurationError(f"Unknown manifest schema '{schema}'. Expected csv or jsonl")
    rows = _iter_csv(path) if schema == "csv" else _iter_jsonl(path)

    report = LoadReport()
    samples: List[ScreenSample] = []
    seen = set()
    for line_num, row in rows:
        report.total += 1
        if isinstance(row, str):
            report.reject(line_num, "unparsable", row)
            continue
        try:
            sample = ScreenSample.model_validate(row)
        except ValidationError as e:
            report.reject(line_num, _classify(e), e.errors()[0]["msg"])
            continue
        if sample.key in seen:
            report.reject(line_num, "duplicate", f"image_path '{sample.key}' already listed")
            continue
        if check_images and not (path.parent / sample.image_path).exists():
            report.reject(line_num, "missing_image", f"{sample.image_path} not found")
            continue
        seen.add(sample.key)
        samples.append(sample)
        report.accepted += 1

    logger.info("Loaded %s: %d accepted, %d rejected %s", path, report.accepted,
                report.rejected, dict(report.reasons) if report.rejected else "")
    return Manifest(samples, path, seed, report=report)


def write_manifest(samples: Iterable[ScreenSample], path: Union[str, Path],
                   schema: Optional[str] = None) -> Path:
    path = Path(path)
    schema = schema or infer_schema(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [s.as_row() for s in samples]
    if schema == "csv":
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=list(FIELDS))
            writer.writeheader()
            writer.writerows(rows)
    elif schema == "jsonl":
        with open(path, "w", encoding="utf-8") as f:
            for row in rows:
                f.write(json.dumps(row) + "\n")
    else:
        raise ConfigurationError(f"Unknown manifest schema '{schema}'. Expected csv or jsonl")
    return path


# ---------------------------------------------------------------------- #
# Dataset statistics
# ---------------------------------------------------------------------- #

HISTOGRAM_WIDTH = 0.25


@dataclass
class DatasetStats:
    n: int
    category_counts: List[Tuple[str, int]]
    histogram: List[Tuple[float, float, int]]   # (low, high, count)
    split_sizes: Dict[str, int]

    def to_dict(self) -> Dict:
        return {
            "n": self.n,
            "categories": {name: count for name, count in self.category_counts},
            "histogram": [{"low": lo, "high": hi, "count": c} for lo, hi, c in self.histogram],
            "splits": self.split_sizes,
        }

    def render(self) -> str:
        width = max([len(name) for name, _ in self.category_counts] + [8])
        lines = [f"{self.n} samples "
                 f"(train {self.split_sizes['train']}, val {self.split_sizes['val']}, "
                 f"test {self.split_sizes['test']})", "", "Categories:"]
        for name, count in self.category_counts:
            lines.append(f"  {name or '(none)':<{width}} {count:>6}")
        lines += ["", "Ratings:"]
        peak = max([c for _, _, c in self.histogram] + [1])
        for lo, hi, count in self.histogram:
            bar = "#" * round(40 * count / peak)
            lines.append(f"  {lo:4.2f}-{hi:4.2f} {count:>6} {bar}")
        return "\n".join(lines)


def dataset_stats(manifest: Manifest) -> DatasetStats:
    """Category counts (largest first, ties by name) and a 0.25-wide rating histogram"""
    if not manifest.samples:
        raise ContractError("dataset_stats needs a non-empty manifest")
    counts = Counter(s.category for s in manifest.samples)
    ordered = sorted(counts.items(), key=lambda item: (-item[1], item[0]))

    bins = int(round((RATING_MAX - RATING_MIN) / HISTOGRAM_WIDTH))
    tally = [0] * bins
    for s in manifest.samples:
        index = min(int((s.avg_rating - RATING_MIN) / HISTOGRAM_WIDTH), bins - 1)
        tally[index] += 1
    histogram = [(RATING_MIN + i * HISTOGRAM_WIDTH, RATING_MIN + (i + 1) * HISTOGRAM_WIDTH, c)
                 for i, c in enumerate(tally)]
    return DatasetStats(len(manifest), ordered, histogram, manifest.split_sizes())

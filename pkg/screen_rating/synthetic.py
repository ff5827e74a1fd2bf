"""
Synthetic Screen Corpus
=======================
Generates rated "screens" whose rating is a known function of what is
drawn and written:

    brightness level b in 0..4   background gray 40 + 40 b
    rectangle count  r in 0..4   filled panels at seeded positions
    caption tone     k in 0..4   one word from TONE_WORDS[k]

    rating = 1 + 4 * (0.3 b/4 + 0.3 r/4 + 0.4 k/4) + noise, clipped to [1, 5]

Every caption also carries a unique app token (``app0007``) so a model can
memorize individual samples when asked to overfit.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Union

import numpy as np
from PIL import Image, ImageDraw

from .errors import ConfigurationError
from .manifest import Manifest, ScreenSample, load_manifest, write_manifest

logger = logging.getLogger(__name__)

LEVELS = 5
# Smallest canvas with room for a panel at several seeded offsets
MIN_SIZE = 8
WEIGHTS = (0.3, 0.3, 0.4)   # brightness, rectangles, tone

TONE_WORDS = ("broken", "clunky", "plain", "smooth", "delightful")
CATEGORIES = ("shopping", "communication", "social", "travel", "finance", "weather")
FILLER = ("screen", "page", "view", "list", "form", "menu", "settings", "profile")


@dataclass(frozen=True)
class PlantedFactors:
    brightness: int
    rectangles: int
    tone: int


def planted_rating(factors: PlantedFactors) -> float:
    """Noise-free rating for a factor combination, always within [1, 5]"""
    b, r, k = factors.brightness, factors.rectangles, factors.tone
    top = LEVELS - 1
    score = WEIGHTS[0] * b / top + WEIGHTS[1] * r / top + WEIGHTS[2] * k / top
    return 1.0 + 4.0 * score


def draw_screen(factors: PlantedFactors, size: int, rng: np.random.Generator) -> Image.Image:
    gray = 40 + 40 * factors.brightness
    img = Image.new("RGB", (size, size), (gray, gray, gray))
    draw = ImageDraw.Draw(img)
    panel = max(2, size // 5)
    for _ in range(factors.rectangles):
        x0 = int(rng.integers(0, size - panel))
        y0 = int(rng.integers(0, size - panel))
        shade = 255 - gray
        fill = (shade, shade // 2, 255 - shade // 2)
        draw.rectangle([x0, y0, x0 + panel - 1, y0 + panel - 1], fill=fill)
    return img


def _factor_plan(n: int, rng: np.random.Generator) -> List[PlantedFactors]:
    """Both extreme combinations first, then seeded draws"""
    top = LEVELS - 1
    plan = [PlantedFactors(0, 0, 0), PlantedFactors(top, top, top)][:n]
    while len(plan) < n:
        b, r, k = rng.integers(0, LEVELS, size=3)
        plan.append(PlantedFactors(int(b), int(r), int(k)))
    return plan


@dataclass
class SyntheticCorpus:
    manifest: Manifest
    factors: List[PlantedFactors]
    path: Path


def generate_synthetic(n: int, seed: int, out_dir: Union[str, Path], size: int = 64,
                       noise: float = 0.0) -> SyntheticCorpus:
    """
    Write ``n`` PNG screens and ``manifest.csv`` under ``out_dir``.
    The same (n, seed, size, noise) always produces identical files.
    """
    if n < 1:
        raise ConfigurationError(f"n must be >= 1, got {n}")
    if noise < 0:
        raise ConfigurationError(f"noise must be non-negative, got {noise}")
    if size < MIN_SIZE:
        raise ConfigurationError(f"size must be >= {MIN_SIZE} pixels, got {size}")
    out_dir = Path(out_dir)
    image_dir = out_dir / "images"
    image_dir.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(seed)
    plan = _factor_plan(n, rng)
    samples = []
    for index, factors in enumerate(plan):
        name = f"images/screen_{index:04d}.png"
        draw_screen(factors, size, rng).save(out_dir / name, format="PNG")
        words = [f"app{index:04d}", TONE_WORDS[factors.tone],
                 FILLER[int(rng.integers(0, len(FILLER)))]]
        rating = planted_rating(factors)
        if noise > 0:
            rating += float(rng.normal(0.0, noise))
        samples.append(ScreenSample(
            image_path=name,
            caption=" ".join(words),
            category=CATEGORIES[int(rng.integers(0, len(CATEGORIES)))],
            avg_rating=round(float(np.clip(rating, 1.0, 5.0)), 6),
            num_ratings=int(rng.integers(1, 500)),
        ))

    path = write_manifest(samples, out_dir / "manifest.csv")
    logger.info("Wrote %d synthetic screens to %s", n, out_dir)
    return SyntheticCorpus(load_manifest(path, seed=seed), plan, path)


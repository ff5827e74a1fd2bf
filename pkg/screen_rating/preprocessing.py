"""
Image preprocessing: decode -> RGB -> bilinear resize to S x S -> [0, 1]
-> (x - 0.5) / 0.5, giving channel-first arrays in [-1, 1].
"""

import io
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ImageDecodeError
from .tensor import Tensor

logger = logging.getLogger(__name__)

NORM_MEAN = 0.5
NORM_STD = 0.5


def preprocess_array(raw: bytes, size: int) -> np.ndarray:
    """[3, size, size] float64 array; raises ImageDecodeError on bad bytes"""
    try:
        with Image.open(io.BytesIO(raw)) as img:
            rgb = img.convert("RGB")
    except (UnidentifiedImageError, OSError, ValueError) as e:
        raise ImageDecodeError(f"cannot decode image: {e}") from e
    if rgb.size != (size, size):
        rgb = rgb.resize((size, size), Image.Resampling.BILINEAR)
    pixels = np.asarray(rgb, dtype=np.float64) / 255.0
    return ((pixels - NORM_MEAN) / NORM_STD).transpose(2, 0, 1)


def preprocess_image(raw: bytes, size: int = 224) -> Tensor:
    return Tensor(preprocess_array(raw, size))


def load_image(path: Union[str, Path], size: int) -> np.ndarray:
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise ImageDecodeError(f"cannot read {path}: {e}") from e
    return preprocess_array(raw, size)


@dataclass
class ImageBatch:
    """Arrays for the images that decoded, in request order"""
    arrays: List[np.ndarray] = field(default_factory=list)
    keys: List[str] = field(default_factory=list)
    errors: Dict[str, str] = field(default_factory=dict)

    def stacked(self, dtype=np.float64) -> np.ndarray:
        return np.stack(self.arrays).astype(dtype, copy=False)


def load_image_batch(paths: Sequence[Path], keys: Sequence[str], size: int,
                     workers: int = 1) -> ImageBatch:
    """
    Decode many images, optionally on a thread pool. Output order follows
    ``paths`` whatever the worker count; failures land in ``errors``.
    """
    def attempt(path):
        try:
            return load_image(path, size), None
        except ImageDecodeError as e:
            return None, str(e)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(attempt, paths))
    else:
        results = [attempt(p) for p in paths]

    batch = ImageBatch()
    for key, (array, error) in zip(keys, results):
        if error is not None:
            batch.errors[key] = error
            continue
        batch.arrays.append(array)
        batch.keys.append(key)
    if batch.errors:
        logger.warning("%d of %d images failed to decode", len(batch.errors), len(keys))
    return batch

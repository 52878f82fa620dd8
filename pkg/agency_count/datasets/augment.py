# agency_count/datasets/augment.py
from __future__ import annotations

import logging
import zlib
from typing import Tuple

import numpy as np
from PIL import Image

from agency_count.datasets.models import AugmentationConfig, SceneSample

logger = logging.getLogger(__name__)


def sample_rng(seed: int, sample_id: str) -> np.random.Generator:
    """Generator keyed on (seed, sample id); stable across processes."""
    return np.random.default_rng([seed, zlib.crc32(sample_id.encode("utf-8"))])


def _resize(image: np.ndarray, size: Tuple[int, int]) -> np.ndarray:
    height, width = size
    if image.shape[:2] == (height, width):
        return image
    channels = [image] if image.ndim == 2 else [image[..., c] for c in range(image.shape[2])]
    resized = [
        np.asarray(
            Image.fromarray(np.ascontiguousarray(ch, dtype=np.float32)).resize(
                (width, height), Image.Resampling.BILINEAR
            )
        )
        for ch in channels
    ]
    out = resized[0] if image.ndim == 2 else np.stack(resized, axis=-1)
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def augment(sample: SceneSample, cfg: AugmentationConfig) -> SceneSample:
    """
    Random scale, horizontal flip and square crop, applied to image and points
    together. Points that leave the crop are dropped. Deterministic given
    ``cfg.seed`` and ``sample.id``.
    """
    rng = sample_rng(cfg.seed, sample.id)
    height, width = sample.size

    scale = float(rng.uniform(*cfg.scale_range))
    new_h, new_w = max(1, round(height * scale)), max(1, round(width * scale))
    if min(new_h, new_w) < cfg.crop_size:
        grow = cfg.crop_size / min(new_h, new_w)
        logger.debug("Scene %s: rescaling by %.3f to fit crop %d", sample.id, grow, cfg.crop_size)
        new_h = max(cfg.crop_size, round(new_h * grow))
        new_w = max(cfg.crop_size, round(new_w * grow))

    image = _resize(sample.image, (new_h, new_w))
    points = sample.points.copy()
    if points.size:
        points[:, 0] *= new_w / width
        points[:, 1] *= new_h / height

    if rng.uniform() < cfg.hflip_prob:
        image = image[:, ::-1].copy()
        if points.size:
            points[:, 0] = np.maximum(new_w - 1 - points[:, 0], 0.0)

    top = int(rng.integers(0, new_h - cfg.crop_size + 1))
    left = int(rng.integers(0, new_w - cfg.crop_size + 1))
    image = image[top : top + cfg.crop_size, left : left + cfg.crop_size]
    if points.size:
        points = points - np.array([left, top], dtype=np.float64)
        inside = (
            (points[:, 0] >= 0)
            & (points[:, 0] < cfg.crop_size)
            & (points[:, 1] >= 0)
            & (points[:, 1] < cfg.crop_size)
        )
        points = points[inside]

    return SceneSample(
        id=sample.id,
        image=np.ascontiguousarray(image),
        points=points,
        split=sample.split,
    )

# agency_count/datasets/generator.py
"""
Synthetic crowd scenes.

Heads are rendered as isotropic Gaussian blobs over a noisy background; the
exact head positions are the point annotations. Every function here is pure
given its seed.
"""
from __future__ import annotations

import logging
from typing import Tuple

import numpy as np

from agency_count.core.errors import ContractViolationError, SceneOverflowError
from agency_count.datasets.models import (
    Layout,
    SceneDataset,
    SceneSample,
    Split,
    quantize_image,
)

logger = logging.getLogger(__name__)

BACKGROUND_LEVEL = 0.2
BACKGROUND_SIGMA = 0.05
BLOB_PEAK = 0.7
RADIUS_RANGE = (1.5, 3.5)
# at most one head per 2x2 pixel patch
PIXELS_PER_HEAD = 4


def max_heads(size: Tuple[int, int]) -> int:
    height, width = size
    return (height * width) // PIXELS_PER_HEAD


def _sample_points(
    rng: np.random.Generator, count: int, layout: Layout, size: Tuple[int, int]
) -> np.ndarray:
    height, width = size
    if count == 0:
        return np.zeros((0, 2), dtype=np.float64)

    if layout is Layout.UNIFORM:
        x = rng.uniform(0, width, count)
        y = rng.uniform(0, height, count)
    elif layout is Layout.CLUSTERED:
        n_clusters = int(rng.integers(1, 5))
        centers = rng.uniform(
            (0.15 * width, 0.15 * height), (0.85 * width, 0.85 * height), (n_clusters, 2)
        )
        spread = 0.08 * min(height, width)
        owner = rng.integers(0, n_clusters, count)
        offsets = rng.normal(0.0, spread, (count, 2))
        x = centers[owner, 0] + offsets[:, 0]
        y = centers[owner, 1] + offsets[:, 1]
    elif layout is Layout.GRADIENT:
        # density grows linearly along x: inverse CDF of p(x) ~ x
        x = width * np.sqrt(rng.uniform(0, 1, count))
        y = rng.uniform(0, height, count)
    else:
        raise ContractViolationError(f"Unknown layout: {layout}")

    # keep every head strictly inside the image
    x = np.clip(x, 0.0, np.nextafter(width, 0))
    y = np.clip(y, 0.0, np.nextafter(height, 0))
    return np.stack([x, y], axis=1)


def _render(
    rng: np.random.Generator, points: np.ndarray, size: Tuple[int, int]
) -> np.ndarray:
    height, width = size
    image = BACKGROUND_LEVEL + rng.normal(0.0, BACKGROUND_SIGMA, size)
    radii = rng.uniform(*RADIUS_RANGE, len(points))

    for (x, y), radius in zip(points, radii):
        reach = int(np.ceil(3 * radius))
        x0, x1 = max(int(x) - reach, 0), min(int(x) + reach + 1, width)
        y0, y1 = max(int(y) - reach, 0), min(int(y) + reach + 1, height)
        yy, xx = np.mgrid[y0:y1, x0:x1]
        d2 = (xx + 0.5 - x) ** 2 + (yy + 0.5 - y) ** 2
        image[y0:y1, x0:x1] += BLOB_PEAK * np.exp(-d2 / (2 * radius**2))

    return quantize_image(image)


def generate_scene(
    count: int,
    layout: Layout | str,
    size: Tuple[int, int],
    seed: int,
    *,
    scene_id: str | None = None,
    split: Split | str = Split.LABELED,
) -> SceneSample:
    """Render one scene with ``count`` heads; bit-identical for equal arguments."""
    height, width = size
    if count < 0:
        raise ContractViolationError(f"count must be >= 0, got {count}")
    if height < 64 or width < 64:
        raise ContractViolationError(f"scene size must be at least 64x64, got {size}")
    if count > max_heads(size):
        raise SceneOverflowError(
            f"{count} heads cannot be placed in a {height}x{width} image "
            f"(limit {max_heads(size)})",
            details={"count": count, "limit": max_heads(size)},
        )

    rng = np.random.default_rng(seed)
    points = _sample_points(rng, count, Layout(layout), size)
    image = _render(rng, points, size)
    return SceneSample(
        id=scene_id or f"scene-{seed}",
        image=image,
        points=points,
        split=Split(split),
    )


def split_counts(n: int, labeled_ratio: float) -> Tuple[int, int]:
    """(labeled, unlabeled) counts for ``n`` training scenes; at least one labeled."""
    if n < 1:
        raise ContractViolationError(f"need at least one training scene, got {n}")
    if not 0.0 < labeled_ratio <= 1.0:
        raise ContractViolationError(f"labeled_ratio must be in (0, 1], got {labeled_ratio}")
    labeled = min(n, max(1, int(round(labeled_ratio * n))))
    return labeled, n - labeled


def generate_dataset(
    n: int,
    labeled_ratio: float,
    layout: Layout | str,
    seed: int,
    *,
    n_test: int = 0,
    size: Tuple[int, int] = (128, 128),
    count_range: Tuple[int, int] = (5, 120),
    stride_hint: int = 8,
) -> SceneDataset:
    """
    ``n`` training scenes split labeled/unlabeled by ``labeled_ratio``, plus
    ``n_test`` held-out test scenes. Per-scene head counts and seeds are drawn
    from one master generator.
    """
    n_labeled, _ = split_counts(n, labeled_ratio)
    master = np.random.default_rng(seed)
    lo, hi = count_range
    hi = min(hi, max_heads(size))

    samples = []
    for index in range(n + n_test):
        if index < n_labeled:
            split = Split.LABELED
        elif index < n:
            split = Split.UNLABELED
        else:
            split = Split.TEST
        samples.append(
            generate_scene(
                int(master.integers(lo, hi + 1)),
                layout,
                size,
                int(master.integers(0, 2**31 - 1)),
                scene_id=f"{split.value}-{index:05d}",
                split=split,
            )
        )

    logger.info(
        "Generated %d scenes (%d labeled, %d unlabeled, %d test, layout=%s)",
        len(samples), n_labeled, n - n_labeled, n_test, Layout(layout).value,
    )
    return SceneDataset(samples=samples, stride_hint=stride_hint)

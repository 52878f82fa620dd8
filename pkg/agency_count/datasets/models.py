# agency_count/datasets/models.py
from __future__ import annotations

from dataclasses import dataclass, field
try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        __str__ = str.__str__
        __format__ = str.__format__
from typing import List, Tuple

import numpy as np

from agency_count.core.errors import ContractViolationError


class Split(StrEnum):
    LABELED = "labeled"
    UNLABELED = "unlabeled"
    TEST = "test"


class Layout(StrEnum):
    UNIFORM = "uniform"
    CLUSTERED = "clustered"
    GRADIENT = "gradient"


def quantize_image(image: np.ndarray) -> np.ndarray:
    """Snap a [0, 1] image onto 8-bit levels, the form PNG stores losslessly."""
    return to_float_image(np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8))


def to_float_image(raw: np.ndarray) -> np.ndarray:
    return raw.astype(np.float32) / np.float32(255.0)


@dataclass(frozen=True, eq=False)
class SceneSample:
    """
    One image with its point annotations.

    ``image`` is ``(H, W)`` grayscale or ``(H, W, 3)``, values in [0, 1].
    ``points`` is an ``(M, 2)`` float array of ``(x, y)`` pixel coordinates with
    ``0 <= x < W`` and ``0 <= y < H``.
    """

    id: str
    image: np.ndarray
    points: np.ndarray
    split: Split

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "split", Split(self.split))
        if self.image.ndim not in (2, 3):
            raise ContractViolationError(
                f"Scene {self.id}: image must be HxW or HxWx3, got {self.image.shape}"
            )
        bad = out_of_bounds(points, self.size)
        if bad:
            raise ContractViolationError(
                f"Scene {self.id}: {len(bad)} point(s) outside image bounds "
                f"{self.size}, first {points[bad[0]].tolist()}",
                details={"record_id": self.id, "indices": bad},
            )

    @property
    def size(self) -> Tuple[int, int]:
        return int(self.image.shape[0]), int(self.image.shape[1])

    @property
    def count(self) -> int:
        return int(self.points.shape[0])


def out_of_bounds(points: np.ndarray, size: Tuple[int, int]) -> List[int]:
    height, width = size
    if points.size == 0:
        return []
    x, y = points[:, 0], points[:, 1]
    bad = ~((x >= 0) & (x < width) & (y >= 0) & (y < height) & np.isfinite(points).all(1))
    return [int(i) for i in np.flatnonzero(bad)]


@dataclass(frozen=True, eq=False)
class CellGrid:
    """Values on the stride-``stride`` cell grid of an image."""

    stride: int
    values: np.ndarray

    @property
    def height(self) -> int:
        return int(self.values.shape[0])

    @property
    def width(self) -> int:
        return int(self.values.shape[1])

    @property
    def num_cells(self) -> int:
        return self.height * self.width


@dataclass(frozen=True)
class AugmentationConfig:
    scale_range: Tuple[float, float] = (0.7, 1.3)
    hflip_prob: float = 0.5
    crop_size: int = 128
    seed: int = 0

    def __post_init__(self) -> None:
        lo, hi = self.scale_range
        if not 0 < lo <= hi:
            raise ContractViolationError(
                f"scale_range must satisfy 0 < lo <= hi: {self.scale_range}"
            )
        if not 0.0 <= self.hflip_prob <= 1.0:
            raise ContractViolationError(f"hflip_prob must be in [0, 1]: {self.hflip_prob}")
        if self.crop_size < 1:
            raise ContractViolationError(f"crop_size must be positive: {self.crop_size}")


@dataclass
class SceneDataset:
    samples: List[SceneSample] = field(default_factory=list)
    stride_hint: int = 8

    def by_split(self, split: Split | str) -> List[SceneSample]:
        split = Split(split)
        return [s for s in self.samples if s.split is split]

    @property
    def labeled(self) -> List[SceneSample]:
        return self.by_split(Split.LABELED)

    @property
    def unlabeled(self) -> List[SceneSample]:
        return self.by_split(Split.UNLABELED)

    @property
    def test(self) -> List[SceneSample]:
        return self.by_split(Split.TEST)

    def __len__(self) -> int:
        return len(self.samples)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SceneDataset):
            return NotImplemented
        if self.stride_hint != other.stride_hint or len(self) != len(other):
            return False
        return all(
            a.id == b.id
            and a.split is b.split
            and np.array_equal(a.points, b.points)
            and np.array_equal(a.image, b.image)
            for a, b in zip(self.samples, other.samples)
        )

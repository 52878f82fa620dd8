# agency_count/datasets/prepared.py
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch

from agency_count.datasets.models import CellGrid, SceneSample, Split
from agency_count.datasets.rasterize import rasterize_density, rasterize_mask


@dataclass(frozen=True, eq=False)
class PreparedScene:
    """A scene ready for the model: CHW image tensor plus its GT cell grids."""

    sample: SceneSample
    image: torch.Tensor
    density: CellGrid
    mask: CellGrid

    @property
    def id(self) -> str:
        return self.sample.id

    @property
    def is_labeled(self) -> bool:
        return self.sample.split is Split.LABELED

    @property
    def points(self) -> np.ndarray:
        return self.sample.points

    @property
    def size(self):
        return self.sample.size


def image_tensor(image: np.ndarray) -> torch.Tensor:
    array = image[None] if image.ndim == 2 else np.moveaxis(image, -1, 0)
    return torch.from_numpy(np.ascontiguousarray(array, dtype=np.float32))


def prepare_scene(sample: SceneSample, stride: int, dilation: int) -> PreparedScene:
    return PreparedScene(
        sample=sample,
        image=image_tensor(sample.image),
        density=rasterize_density(sample.points, stride, sample.size),
        mask=rasterize_mask(sample.points, stride, sample.size, dilation),
    )


def stack_images(scenes: Sequence[PreparedScene]) -> torch.Tensor:
    return torch.stack([scene.image for scene in scenes])

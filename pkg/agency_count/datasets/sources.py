# agency_count/datasets/sources.py
from __future__ import annotations

from abc import ABC, abstractmethod
from pathlib import Path
from typing import Tuple

from agency_count.datasets.generator import generate_dataset
from agency_count.datasets.manifest import load_manifest
from agency_count.datasets.models import Layout, SceneDataset


class SceneSource(ABC):
    """Adapter interface for anything that can produce a SceneDataset."""

    name: str = "base"

    @abstractmethod
    def load(self) -> SceneDataset:
        raise NotImplementedError


class SyntheticSource(SceneSource):
    name = "synthetic"

    def __init__(
        self,
        *,
        n: int,
        labeled_ratio: float,
        layout: Layout | str = Layout.UNIFORM,
        seed: int = 0,
        n_test: int = 0,
        size: Tuple[int, int] = (128, 128),
        count_range: Tuple[int, int] = (5, 120),
        stride_hint: int = 8,
    ):
        self.n = n
        self.labeled_ratio = labeled_ratio
        self.layout = Layout(layout)
        self.seed = seed
        self.n_test = n_test
        self.size = size
        self.count_range = count_range
        self.stride_hint = stride_hint

    def load(self) -> SceneDataset:
        return generate_dataset(
            self.n,
            self.labeled_ratio,
            self.layout,
            self.seed,
            n_test=self.n_test,
            size=self.size,
            count_range=self.count_range,
            stride_hint=self.stride_hint,
        )


class ManifestSource(SceneSource):
    name = "manifest"

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def load(self) -> SceneDataset:
        return load_manifest(self.path)


def get_scene_source(*, provider: str, **options) -> SceneSource:
    """
    Real-dataset parsers plug in here by subclassing ``SceneSource``; only the
    synthetic generator and JSON manifests ship with the package.
    """
    if provider == "synthetic":
        return SyntheticSource(**options)

    if provider == "manifest":
        if "path" not in options:
            raise ValueError("path required for manifest scene source")
        return ManifestSource(options["path"])

    raise ValueError(f"Unknown scene source provider: {provider}")

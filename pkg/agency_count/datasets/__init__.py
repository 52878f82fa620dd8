from agency_count.datasets.augment import augment
from agency_count.datasets.generator import generate_dataset, generate_scene
from agency_count.datasets.manifest import load_manifest, save_manifest
from agency_count.datasets.models import (
    AugmentationConfig,
    CellGrid,
    Layout,
    SceneDataset,
    SceneSample,
    Split,
)
from agency_count.datasets.prepared import PreparedScene, prepare_scene
from agency_count.datasets.rasterize import rasterize_density, rasterize_mask
from agency_count.datasets.sources import SceneSource, get_scene_source

__all__ = [
    "AugmentationConfig",
    "CellGrid",
    "Layout",
    "PreparedScene",
    "SceneDataset",
    "SceneSample",
    "SceneSource",
    "Split",
    "augment",
    "generate_dataset",
    "generate_scene",
    "get_scene_source",
    "load_manifest",
    "prepare_scene",
    "rasterize_density",
    "rasterize_mask",
    "save_manifest",
]

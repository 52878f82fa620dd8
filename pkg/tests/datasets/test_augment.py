# tests/datasets/test_augment.py
import numpy as np
import pytest

from agency_count.datasets.augment import augment
from agency_count.datasets.generator import generate_scene
from agency_count.datasets.models import AugmentationConfig, SceneSample
from agency_count.core.errors import ContractViolationError

pytestmark = pytest.mark.unit


@pytest.fixture(scope="module")
def scene():
    return generate_scene(60, "uniform", (96, 96), seed=21, scene_id="aug-scene")


def test_identity_configuration(scene):
    cfg = AugmentationConfig(scale_range=(1.0, 1.0), hflip_prob=0.0, crop_size=96, seed=0)
    out = augment(scene, cfg)
    assert np.array_equal(out.image, scene.image)
    assert np.array_equal(out.points, scene.points)


def test_hflip_maps_x_to_mirror():
    image = np.zeros((64, 64), dtype=np.float32)
    image[10, 5] = 1.0
    sample = SceneSample(id="flip", image=image, points=np.array([[5.0, 10.0]]), split="labeled")
    cfg = AugmentationConfig(scale_range=(1.0, 1.0), hflip_prob=1.0, crop_size=64, seed=0)
    out = augment(sample, cfg)
    assert out.points.tolist() == [[58.0, 10.0]]
    assert out.image[10, 58] == 1.0


def test_hflip_clamps_last_column():
    sample = SceneSample(
        id="edge", image=np.zeros((64, 64), dtype=np.float32),
        points=np.array([[63.5, 3.0]]), split="labeled",
    )
    cfg = AugmentationConfig(scale_range=(1.0, 1.0), hflip_prob=1.0, crop_size=64, seed=0)
    assert augment(sample, cfg).points.tolist() == [[0.0, 3.0]]


@pytest.mark.parametrize("seed", range(5))
def test_downscale_then_crop_keeps_points_inside(scene, seed):
    cfg = AugmentationConfig(scale_range=(0.7, 0.7), hflip_prob=0.5, crop_size=64, seed=seed)
    out = augment(scene, cfg)
    assert out.image.shape == (64, 64)
    if out.count:
        assert (out.points >= 0).all()
        assert (out.points < 64).all()
    assert out.count <= scene.count


def test_crop_larger_than_scaled_image_rescales_up(scene):
    cfg = AugmentationConfig(scale_range=(0.7, 0.7), hflip_prob=0.0, crop_size=96, seed=0)
    out = augment(scene, cfg)
    assert out.image.shape == (96, 96)
    assert out.count == scene.count


def test_augment_is_deterministic(scene):
    cfg = AugmentationConfig(seed=17, crop_size=64)
    a, b = augment(scene, cfg), augment(scene, cfg)
    assert np.array_equal(a.image, b.image)
    assert np.array_equal(a.points, b.points)


def test_augment_depends_on_sample_id(scene):
    cfg = AugmentationConfig(seed=17, crop_size=64)
    twin = SceneSample(id="other-id", image=scene.image, points=scene.points, split=scene.split)
    a, b = augment(scene, cfg), augment(twin, cfg)
    assert not (np.array_equal(a.image, b.image) and np.array_equal(a.points, b.points))


@pytest.mark.parametrize(
    "kwargs",
    [
        {"scale_range": (1.2, 0.8)},
        {"scale_range": (0.0, 1.0)},
        {"hflip_prob": 1.5},
        {"crop_size": 0},
    ],
)
def test_invalid_augmentation_config(kwargs):
    with pytest.raises(ContractViolationError):
        AugmentationConfig(**kwargs)

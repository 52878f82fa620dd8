# tests/conftest.py
"""
Shared fixtures.

Two test modes, selected by marker:

- unit tests (default): small deterministic cases, seconds in total
- slow tests (``-m slow``): multi-seed trend runs of the toy lab and trainer
"""
import os

import pytest
import torch

from agency_count.core.config import Settings, reset_settings_cache
from agency_count.datasets.generator import generate_dataset

# ---------------------------------------------------------------------
# Settings
# ---------------------------------------------------------------------
TINY = {
    "data": {"stride": 8, "crop_size": 64},
    "model": {"stride": 8, "channels": 16, "head_hidden": 16, "attn_heads": 2},
    "agency": {"num_agents": 4},
    "train": {"epochs": 1, "batch_labeled": 1, "batch_unlabeled": 2, "checkpoint_every": 0},
}


@pytest.fixture(autouse=True)
def _isolated_settings(monkeypatch):
    """No AGENCY_COUNT_* variable from the caller's shell leaks into a test."""
    for key in list(os.environ):
        if key.startswith("AGENCY_COUNT_"):
            monkeypatch.delenv(key)
    reset_settings_cache()
    yield
    reset_settings_cache()


@pytest.fixture
def tiny_settings() -> Settings:
    return Settings(**TINY)


# ---------------------------------------------------------------------
# Data
# ---------------------------------------------------------------------
@pytest.fixture(scope="session")
def tiny_dataset():
    """4 training scenes (2 labeled) and 2 test scenes of 64x64 pixels."""
    return generate_dataset(
        4, 0.5, "uniform", seed=3, n_test=2, size=(64, 64), count_range=(3, 20)
    )


@pytest.fixture
def f64():
    previous = torch.get_default_dtype()
    torch.set_default_dtype(torch.float64)
    yield torch.float64
    torch.set_default_dtype(previous)

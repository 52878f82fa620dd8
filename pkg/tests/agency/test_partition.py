# tests/agency/test_partition.py
import logging

import numpy as np
import pytest
import torch

from agency_count.agency.partition import (
    IntervalPartition,
    allocate,
    allocate_many,
    build_partition,
    interval_centers,
)
from agency_count.core.config import Settings
from agency_count.core.errors import ContractViolationError

pytestmark = pytest.mark.unit

BORDERS = IntervalPartition(borders=(1.0, 2.0, 3.0))


def test_single_agent_has_no_borders():
    partition = build_partition([0.5, 2.0, 7.0], 1)
    assert partition.borders == ()
    assert partition.num_agents == 1
    assert allocate(1e-9, partition) == 0
    assert allocate(1e9, partition) == 0


def test_quantile_borders_from_repeated_levels():
    partition = build_partition([1, 1, 2, 2, 3, 3, 4, 4], 4, "quantile")
    assert partition.borders == pytest.approx((1.0, 2.0, 3.0))
    assert not partition.fallback


def test_default_agent_count_from_config():
    assert Settings().agency.num_agents == 24


def test_quantile_ignores_empty_cells():
    with_zeros = build_partition([0, 0, 0, 1, 1, 2, 2, 3, 3, 4, 4, 0], 4)
    assert with_zeros.borders == pytest.approx((1.0, 2.0, 3.0))


def test_too_few_values_fall_back_to_geometric(caplog):
    with caplog.at_level(logging.WARNING):
        partition = build_partition([1.0, 1.0, 1.0], 4, "quantile")
    assert partition.fallback
    assert partition.strategy == "geometric"
    assert partition.num_agents == 4
    assert "falling back" in caplog.text


def test_linear_borders():
    assert build_partition([1.0, 8.0], 4, "linear").borders == pytest.approx((2.0, 4.0, 6.0))


@pytest.mark.parametrize("strategy", ["quantile", "geometric", "linear"])
def test_borders_strictly_increasing(strategy):
    rng = np.random.default_rng(0)
    values = rng.integers(1, 30, 500).astype(float)
    partition = build_partition(values, 24, strategy)
    borders = np.array(partition.borders)
    assert len(borders) == 23
    assert (borders > 0).all()
    assert (np.diff(borders) > 0).all()


def test_unknown_strategy():
    with pytest.raises(ContractViolationError):
        build_partition([1.0, 2.0], 2, "cubic")


@pytest.mark.parametrize("borders", [(0.0, 1.0), (2.0, 1.0), (1.0, 1.0), (1.0, float("inf"))])
def test_invalid_borders(borders):
    with pytest.raises(ContractViolationError):
        IntervalPartition(borders=borders)


@pytest.mark.parametrize(
    "borders, centers",
    [
        ((), (1.0,)),
        ((2.0,), (1.0, 2.0)),
        ((1.0, 2.0, 3.0), (0.5, 1.5, 2.5, 3.0)),
    ],
)
def test_interval_centers(borders, centers):
    assert interval_centers(borders) == pytest.approx(centers)


@pytest.mark.parametrize(
    "d, index",
    [
        (0.5, 0),      # first interval, open at 0
        (1.0, 1),      # left-inclusive border
        (1.999, 1),
        (2.0, 2),
        (100.0, 3),    # right-open tail
    ],
)
def test_allocate(d, index):
    assert allocate(d, BORDERS) == index


@pytest.mark.parametrize("d", [0.0, -1.0, float("nan"), float("inf")])
def test_allocate_rejects(d):
    with pytest.raises(ContractViolationError):
        allocate(d, BORDERS)


def test_allocate_stable_inside_interval():
    rng = np.random.default_rng(1)
    for d in rng.uniform(1.01, 1.99, 50):
        assert allocate(d, BORDERS) == allocate(d + 1e-3, BORDERS) == 1


def test_allocate_many_matches_scalar():
    rng = np.random.default_rng(2)
    densities = rng.uniform(0.01, 5.0, 200)
    densities[:4] = [1.0, 2.0, 3.0, 0.5]
    batch = allocate_many(torch.tensor(densities), BORDERS)
    assert batch.tolist() == [allocate(d, BORDERS) for d in densities]


def test_allocate_many_rejects_non_positive():
    with pytest.raises(ContractViolationError):
        allocate_many(torch.tensor([1.0, 0.0]), BORDERS)


def test_partition_dict_round_trip():
    partition = build_partition([1.0, 1.0, 1.0], 3)
    assert IntervalPartition.from_dict(partition.to_dict()) == partition

# tests/agency/test_losses.py
import math

import pytest
import torch

from agency_count.agency.bank import AgentBank
from agency_count.agency.losses import (
    RegionFeatures,
    agent_background_loss,
    agent_foreground_loss,
    agent_gradients,
    background_loss,
    foreground_loss,
)
from agency_count.agency.partition import IntervalPartition, allocate
from agency_count.agency.similarity import cosine
from agency_count.core.errors import ContractViolationError

pytestmark = pytest.mark.unit


def _bank(agents) -> AgentBank:
    return AgentBank(torch.as_tensor(agents, dtype=torch.float64), lr=0.0)


def _partition(num_agents: int) -> IntervalPartition:
    return IntervalPartition(borders=tuple(float(i) for i in range(1, num_agents)))


def test_foreground_loss_aligned_feature_is_minus_one():
    bank = _bank([[2.0, 0.0], [0.0, 1.0]])
    features = RegionFeatures.build([[0.0, 5.0]], [1.5])
    assert float(agent_foreground_loss(features, _partition(2), bank)) == pytest.approx(-1.0)


def test_empty_foreground_and_background_are_zero():
    bank = _bank([[1.0, 0.0], [0.0, 1.0]])
    features = RegionFeatures.build([], [], [], dim=2)
    assert float(agent_foreground_loss(features, _partition(2), bank)) == 0.0
    assert float(agent_background_loss(features, bank)) == 0.0
    assert torch.count_nonzero(agent_gradients(features, _partition(2), bank)) == 0


def test_foreground_loss_matches_per_pair_sum():
    agents = [[1.0, 0.0], [0.6, 0.8]]
    fg = [[1.0, 1.0], [-1.0, 2.0]]
    densities = [0.5, 3.0]
    partition = _partition(2)
    expected = -sum(
        float(cosine(agents[allocate(d, partition)], e)) for e, d in zip(fg, densities)
    )
    got = agent_foreground_loss(RegionFeatures.build(fg, densities), partition, _bank(agents))
    assert float(got) == pytest.approx(expected)


@pytest.mark.parametrize(
    "agent, b, expected",
    [([1.0, 0.0], [1.0, 0.0], 1.0), ([1.0, 0.0], [0.0, 1.0], 0.0)],
)
def test_background_loss_examples(agent, b, expected):
    features = RegionFeatures.build([], [], [b], dim=2)
    assert float(agent_background_loss(features, _bank([agent]))) == pytest.approx(expected)


def test_background_loss_is_mean_over_agents_of_double_sum():
    agents = [[1.0, 2.0], [-1.0, 0.5]]
    bg = [[0.3, 1.0], [2.0, -1.0], [-0.5, -0.5]]
    expected = sum(float(cosine(f, b)) for f in agents for b in bg) / len(agents)
    features = RegionFeatures.build([], [], bg, dim=2)
    assert float(agent_background_loss(features, _bank(agents))) == pytest.approx(expected)


def test_aligned_pair_has_zero_foreground_gradient():
    bank = _bank([[0.6, 0.8], [1.0, 0.0]])
    features = RegionFeatures.build([[0.6, 0.8]], [0.5])
    grad = agent_gradients(features, _partition(2), bank)
    torch.testing.assert_close(grad, torch.zeros(2, 2, dtype=torch.float64))


def test_one_aligned_feature_per_agent_is_minimum():
    agents = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    features = RegionFeatures.build([[3.0, 0, 0], [0, 0.1, 0], [0, 0, 9.0]], [0.5, 1.5, 2.5])
    partition, bank = _partition(3), _bank(agents)
    assert float(agent_foreground_loss(features, partition, bank)) == pytest.approx(-3.0)
    torch.testing.assert_close(
        agent_gradients(features, partition, bank), torch.zeros(3, 3, dtype=torch.float64)
    )


def _fd_gradient(loss_fn, agents: torch.Tensor, h: float = 1e-6) -> torch.Tensor:
    grad = torch.zeros_like(agents)
    for idx in range(agents.numel()):
        plus, minus = agents.clone(), agents.clone()
        plus.view(-1)[idx] += h
        minus.view(-1)[idx] -= h
        grad.view(-1)[idx] = (loss_fn(plus) - loss_fn(minus)) / (2 * h)
    return grad


def _random_case(g: torch.Generator):
    dim = int(torch.randint(2, 9, (), generator=g))
    num_agents = int(torch.randint(1, 6, (), generator=g))
    n = int(torch.randint(0, 7, (), generator=g))
    m = int(torch.randint(0, 7, (), generator=g))
    agents = torch.randn(num_agents, dim, dtype=torch.float64, generator=g)
    fg = torch.randn(n, dim, dtype=torch.float64, generator=g)
    bg = torch.randn(m, dim, dtype=torch.float64, generator=g)
    densities = 0.05 + num_agents * torch.rand(n, dtype=torch.float64, generator=g)
    return agents, RegionFeatures(fg, densities, bg), _partition(num_agents)


def test_agent_gradients_match_finite_differences():
    g = torch.Generator().manual_seed(1234)
    for _ in range(100):
        agents, features, partition = _random_case(g)
        assignment = features.assignments(partition)

        def total(a):
            return foreground_loss(a, features.foreground, assignment) + background_loss(
                a, features.background
            )

        analytic = agent_gradients(features, partition, _bank(agents))
        numeric = _fd_gradient(total, agents)
        scale = max(float(torch.linalg.vector_norm(numeric)), 1e-6)
        assert float(torch.linalg.vector_norm(analytic - numeric)) / scale < 1e-4


def test_losses_are_scale_invariant():
    g = torch.Generator().manual_seed(5)
    agents, features, partition = _random_case(g)
    while features.num_foreground == 0 or features.num_background == 0:
        agents, features, partition = _random_case(g)
    bank = _bank(agents)
    scaled = RegionFeatures(
        features.foreground * 3.7, features.densities, features.background * 0.2
    )
    assert float(agent_foreground_loss(scaled, partition, bank)) == pytest.approx(
        float(agent_foreground_loss(features, partition, bank))
    )
    assert float(agent_background_loss(scaled, bank)) == pytest.approx(
        float(agent_background_loss(features, bank))
    )


def test_agent_count_must_match_partition():
    features = RegionFeatures.build([[1.0, 0.0]], [1.0])
    with pytest.raises(ContractViolationError):
        agent_gradients(features, _partition(3), _bank([[1.0, 0.0], [0.0, 1.0]]))


@pytest.mark.parametrize(
    "fg, densities, bg",
    [
        (torch.ones(2, 3), torch.ones(3), torch.ones(1, 3)),
        (torch.ones(2, 3), torch.ones(2), torch.ones(1, 4)),
        (torch.ones(1, 3), torch.tensor([math.nan]), torch.ones(1, 3)),
    ],
)
def test_region_features_validation(fg, densities, bg):
    with pytest.raises(ContractViolationError):
        RegionFeatures(fg, densities, bg)


def test_sources_default_to_gt():
    features = RegionFeatures.build([[1.0, 0.0], [0.0, 1.0]], [1.0, 2.0])
    assert [s.value for s in features.sources] == ["gt", "gt"]

# tests/contrastive/test_gradients.py
import pytest
import torch

from agency_count.agency.partition import IntervalPartition, allocate
from agency_count.contrastive.gradients import (
    batch_contrastive_agent_gradient,
    contrastive_agent_gradient,
)
from agency_count.contrastive.loss import batch_contrastive_loss
from agency_count.contrastive.matching import (
    matching_probability,
    positive_set,
    uncertainty_weight,
)
from agency_count.core.config import MatchConfig

pytestmark = pytest.mark.unit

PARTITION = IntervalPartition(borders=(0.5, 1.0, 2.0, 3.5))


def _fd(loss_fn, agents, h=1e-6):
    grad = torch.zeros_like(agents)
    for idx in range(agents.numel()):
        plus, minus = agents.clone(), agents.clone()
        plus.view(-1)[idx] += h
        minus.view(-1)[idx] -= h
        grad.view(-1)[idx] = (loss_fn(plus) - loss_fn(minus)) / (2 * h)
    return grad


@pytest.mark.parametrize("distribution", ["laplace", "normal"])
@pytest.mark.parametrize("rule", ["verbatim", "matched_guaranteed"])
@pytest.mark.parametrize("clamp", [False, True])
def test_agent_gradient_matches_finite_differences(distribution, rule, clamp):
    g = torch.Generator().manual_seed(7)
    cfg = MatchConfig(distribution=distribution, positive_rule=rule, clamp_weights=clamp, tau=0.3)
    for _ in range(13):
        dim = int(torch.randint(2, 9, (), generator=g))
        agents = torch.randn(PARTITION.num_agents, dim, dtype=torch.float64, generator=g)
        fg = torch.randn(4, dim, dtype=torch.float64, generator=g)
        densities = 0.05 + 5 * torch.rand(4, dtype=torch.float64, generator=g)

        def total(a):
            return batch_contrastive_loss(fg, densities, a, PARTITION, cfg).sum()

        analytic = batch_contrastive_agent_gradient(fg, densities, agents, PARTITION, cfg)
        numeric = _fd(total, agents)
        scale = max(float(torch.linalg.vector_norm(numeric)), 1e-6)
        assert float(torch.linalg.vector_norm(analytic - numeric)) / scale < 1e-5


def test_agent_gradient_agrees_with_autograd():
    g = torch.Generator().manual_seed(8)
    agents = torch.randn(5, 6, dtype=torch.float64, generator=g).requires_grad_(True)
    fg = torch.randn(7, 6, dtype=torch.float64, generator=g)
    densities = 0.05 + 5 * torch.rand(7, dtype=torch.float64, generator=g)
    cfg = MatchConfig(tau=0.1)
    batch_contrastive_loss(fg, densities, agents, PARTITION, cfg).sum().backward()
    analytic = batch_contrastive_agent_gradient(fg, densities, agents.detach(), PARTITION, cfg)
    torch.testing.assert_close(analytic, agents.grad)


def test_negative_agent_gradient_closed_form():
    g = torch.Generator().manual_seed(9)
    cfg = MatchConfig(tau=0.2, positive_rule="matched_guaranteed")
    agents = torch.randn(5, 3, dtype=torch.float64, generator=g)
    e = torch.randn(3, dtype=torch.float64, generator=g)
    d = 1.4
    positives = positive_set(d, PARTITION, cfg.distribution, cfg.positive_rule)
    assert positives == {allocate(d, PARTITION)}

    centers = PARTITION.centers_tensor()
    weights = uncertainty_weight(matching_probability(d, centers, cfg.distribution))
    sims = torch.nn.functional.cosine_similarity(agents, e[None, :], dim=1)
    u = torch.exp(sims / cfg.tau)
    denominator = (weights * u).sum() + cfg.eps_num

    grad = contrastive_agent_gradient(e, d, agents, PARTITION, cfg)
    for i in range(PARTITION.num_agents):
        if i in positives:
            continue
        f = agents[i]
        ds_df = e / (e.norm() * f.norm()) - sims[i] * f / f.norm() ** 2
        expected = (1 / cfg.tau) * (weights[i] * u[i] / denominator) * ds_df
        torch.testing.assert_close(grad[i], expected, rtol=1e-5, atol=1e-12)


def test_empty_foreground_gives_zero_gradient():
    agents = torch.randn(5, 3, dtype=torch.float64)
    grad = batch_contrastive_agent_gradient(
        torch.zeros(0, 3, dtype=torch.float64),
        torch.zeros(0, dtype=torch.float64),
        agents,
        PARTITION,
        MatchConfig(),
    )
    assert torch.count_nonzero(grad) == 0


@pytest.mark.parametrize(
    "overrides",
    [{"weighting": "uniform"}, {"objective": "pull"}, {"objective": "pull", "tau": 0.05}],
)
def test_ablation_variants_match_autograd(overrides):
    g = torch.Generator().manual_seed(10)
    agents = torch.randn(5, 6, dtype=torch.float64, generator=g).requires_grad_(True)
    fg = torch.randn(9, 6, dtype=torch.float64, generator=g)
    densities = 0.05 + 5 * torch.rand(9, dtype=torch.float64, generator=g)
    cfg = MatchConfig(tau=0.2, **overrides)
    batch_contrastive_loss(fg, densities, agents, PARTITION, cfg).sum().backward()
    analytic = batch_contrastive_agent_gradient(fg, densities, agents.detach(), PARTITION, cfg)
    torch.testing.assert_close(analytic, agents.grad)

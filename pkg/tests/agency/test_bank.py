# tests/agency/test_bank.py
import json

import pytest
import torch

from agency_count.agency.bank import AgentBank, agent_step
from agency_count.core.errors import (
    CheckpointError,
    ContractViolationError,
    NonFiniteError,
)

pytestmark = pytest.mark.unit


def test_initialize_is_seeded_and_unit_norm():
    a = AgentBank.initialize(24, 16, lr=1e-3, seed=3)
    b = AgentBank.initialize(24, 16, lr=1e-3, seed=3)
    torch.testing.assert_close(a.agents, b.agents)
    torch.testing.assert_close(
        torch.linalg.vector_norm(a.agents, dim=1), torch.ones(24), atol=1e-6, rtol=0
    )
    assert (a.num_agents, a.dim) == (24, 16)


def test_zero_gradient_leaves_agents_unchanged():
    bank = AgentBank.initialize(3, 4, lr=0.1, seed=0, dtype=torch.float64)
    before = bank.agents.clone()
    agent_step(bank, torch.zeros(3, 4, dtype=torch.float64))
    torch.testing.assert_close(bank.agents, before)


def test_zero_learning_rate_leaves_agents_unchanged():
    bank = AgentBank.initialize(3, 4, lr=0.0, seed=0, dtype=torch.float64)
    before = bank.agents.clone()
    bank.step(torch.randn(3, 4, dtype=torch.float64))
    torch.testing.assert_close(bank.agents, before)


def test_first_adam_step_by_hand():
    # fresh Adam: m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps)
    bank = AgentBank(torch.tensor([[1.0, -1.0]], dtype=torch.float64), lr=0.1)
    bank.step(torch.tensor([[2.0, -0.5]], dtype=torch.float64))
    expected = torch.tensor(
        [[1.0 - 0.1 * 2.0 / (2.0 + 1e-8), -1.0 + 0.1 * 0.5 / (0.5 + 1e-8)]],
        dtype=torch.float64,
    )
    torch.testing.assert_close(bank.agents, expected)


def test_collapsed_agent_is_restored():
    bank = AgentBank(torch.tensor([[0.05, 0.0], [1.0, 1.0]], dtype=torch.float64), lr=0.05)
    bank.step(torch.tensor([[1.0, 0.0], [0.0, 0.0]], dtype=torch.float64))
    assert torch.linalg.vector_norm(bank.agents[0]) >= AgentBank.MIN_NORM
    torch.testing.assert_close(
        bank.agents[0], torch.tensor([0.05, 0.0], dtype=torch.float64)
    )


def test_non_finite_gradient_rejected_without_update():
    bank = AgentBank.initialize(2, 3, lr=0.1, seed=0, dtype=torch.float64)
    before = bank.agents.clone()
    grad = torch.zeros(2, 3, dtype=torch.float64)
    grad[1, 2] = float("nan")
    with pytest.raises(NonFiniteError):
        bank.step(grad)
    torch.testing.assert_close(bank.agents, before)
    assert not bank.optimizer.state


def test_gradient_shape_must_match():
    bank = AgentBank.initialize(2, 3, lr=0.1)
    with pytest.raises(ContractViolationError):
        bank.step(torch.zeros(3, 2))


@pytest.mark.parametrize("agents", [torch.zeros(0, 3), torch.zeros(2, 3), torch.ones(3)])
def test_invalid_agents(agents):
    with pytest.raises(ContractViolationError):
        AgentBank(agents, lr=0.1)


def test_json_round_trip_preserves_moments(tmp_path):
    g = torch.Generator().manual_seed(0)
    bank = AgentBank.initialize(4, 3, lr=0.01, seed=1, dtype=torch.float64)
    for _ in range(3):
        bank.step(torch.randn(4, 3, dtype=torch.float64, generator=g))
    path = bank.save(tmp_path / "agents.json")
    header = json.loads(path.read_text())
    assert (header["format"], header["version"]) == ("agent-bank", 1)
    assert header["step"] == 3

    restored = AgentBank.load(path)
    torch.testing.assert_close(restored.agents, bank.agents)
    grad = torch.randn(4, 3, dtype=torch.float64, generator=g)
    bank.step(grad)
    restored.step(grad)
    torch.testing.assert_close(restored.agents, bank.agents)


def test_state_dict_round_trip():
    bank = AgentBank.initialize(2, 2, lr=0.01, seed=0)
    bank.step(torch.ones(2, 2))
    clone = AgentBank.from_state_dict(bank.state_dict())
    torch.testing.assert_close(clone.agents, bank.agents)
    bank.step(torch.ones(2, 2))
    clone.step(torch.ones(2, 2))
    torch.testing.assert_close(clone.agents, bank.agents)


def test_load_missing_file(tmp_path):
    with pytest.raises(CheckpointError, match="not found"):
        AgentBank.load(tmp_path / "agents.json")


@pytest.mark.parametrize(
    "content",
    ["{not json", json.dumps({"format": "agent-bank", "version": 2, "agents": [[1.0]]})],
)
def test_load_bad_file(tmp_path, content):
    path = tmp_path / "agents.json"
    path.write_text(content)
    with pytest.raises(CheckpointError):
        AgentBank.load(path)

# agency_count/agency/losses.py
"""
Agent-side losses and their closed-form gradients.

    L_E = -sum_e s(f_Z(e), e)
    L_B = (1 / N_a) * sum_f sum_b s(f, b)

with ``s`` the cosine similarity. Both vanish on empty inputs.
"""
from __future__ import annotations

from dataclasses import dataclass
try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        __str__ = str.__str__
        __format__ = str.__format__
from typing import Optional, Tuple

import torch

from agency_count.agency.bank import AgentBank
from agency_count.agency.partition import IntervalPartition, allocate_many
from agency_count.agency.similarity import (
    cosine_matrix,
    paired_cosine,
    require_nonzero,
)
from agency_count.core.errors import ContractViolationError


class DensitySource(StrEnum):
    GT = "gt"
    PREDICTED = "predicted"


@dataclass
class RegionFeatures:
    """
    Cell features split into foreground ``E`` and background ``B``.

    ``foreground`` is ``(n, c)`` with one density per row in ``densities``;
    ``background`` is ``(m, c)``. The ``*_cells`` fields hold the flat
    row-major cell index each row came from, when known.
    """

    foreground: torch.Tensor
    densities: torch.Tensor
    background: torch.Tensor
    sources: Tuple[DensitySource, ...] = ()
    foreground_cells: Optional[torch.Tensor] = None
    background_cells: Optional[torch.Tensor] = None
    agent_index: Optional[torch.Tensor] = None

    def __post_init__(self) -> None:
        if self.foreground.ndim != 2 or self.background.ndim != 2:
            raise ContractViolationError("foreground and background must be 2-D")
        if self.foreground.shape[1] != self.background.shape[1]:
            raise ContractViolationError(
                f"feature dims differ: {self.foreground.shape[1]} vs {self.background.shape[1]}"
            )
        if tuple(self.densities.shape) != (self.foreground.shape[0],):
            raise ContractViolationError("one density per foreground feature is required")
        if not bool(torch.isfinite(self.densities).all()):
            raise ContractViolationError("foreground densities must be finite")
        if not self.sources:
            self.sources = (DensitySource.GT,) * self.num_foreground
        if len(self.sources) != self.num_foreground:
            raise ContractViolationError("one source tag per foreground feature is required")

    @classmethod
    def build(
        cls,
        foreground,
        densities,
        background=(),
        *,
        dim: Optional[int] = None,
        source: DensitySource | str = DensitySource.GT,
        dtype: torch.dtype = torch.float64,
    ) -> "RegionFeatures":
        """Convenience constructor from nested sequences."""
        fg = torch.as_tensor(foreground, dtype=dtype)
        bg = torch.as_tensor(background, dtype=dtype)
        if dim is None:
            dim = fg.shape[-1] if fg.numel() else bg.shape[-1]
        fg = fg.reshape(-1, dim)
        bg = bg.reshape(-1, dim)
        d = torch.as_tensor(densities, dtype=dtype).reshape(-1)
        return cls(fg, d, bg, (DensitySource(source),) * fg.shape[0])

    @property
    def dim(self) -> int:
        return int(self.foreground.shape[1])

    @property
    def num_foreground(self) -> int:
        return int(self.foreground.shape[0])

    @property
    def num_background(self) -> int:
        return int(self.background.shape[0])

    def assignments(self, partition: IntervalPartition) -> torch.Tensor:
        if self.agent_index is not None:
            return self.agent_index
        return allocate_many(self.densities, partition)


# -------------------------------------------------
# Tensor-level forms (agents given explicitly)
# -------------------------------------------------
def foreground_loss(
    agents: torch.Tensor, foreground: torch.Tensor, assignment: torch.Tensor
) -> torch.Tensor:
    if foreground.shape[0] == 0:
        return agents.new_zeros(())
    return -paired_cosine(agents[assignment], foreground).sum()


def background_loss(agents: torch.Tensor, background: torch.Tensor) -> torch.Tensor:
    if background.shape[0] == 0:
        return agents.new_zeros(())
    return cosine_matrix(agents, background).sum() / agents.shape[0]


def foreground_gradient(
    agents: torch.Tensor, foreground: torch.Tensor, assignment: torch.Tensor
) -> torch.Tensor:
    """d L_E / d f: ``sum over e with Z(e)=f of s*f/|f|^2 - e/(|e||f|)``."""
    grad = torch.zeros_like(agents)
    if foreground.shape[0] == 0:
        return grad
    f = agents[assignment]
    f_norm = require_nonzero(f, "agent")
    e_norm = require_nonzero(foreground, "foreground")
    s = (f * foreground).sum(-1) / (f_norm * e_norm)
    per_feature = (
        s[:, None] * f / (f_norm**2)[:, None]
        - foreground / (e_norm * f_norm)[:, None]
    )
    return grad.index_add_(0, assignment, per_feature)


def background_gradient(agents: torch.Tensor, background: torch.Tensor) -> torch.Tensor:
    """d L_B / d f: ``(1/N_a) sum_b b/(|b||f|) - s*f/|f|^2``."""
    if background.shape[0] == 0:
        return torch.zeros_like(agents)
    f_norm = require_nonzero(agents, "agent")
    b_norm = require_nonzero(background, "background")
    sims = (agents @ background.T) / (f_norm[:, None] * b_norm[None, :])
    pull = (background / b_norm[:, None]).sum(0)[None, :] / f_norm[:, None]
    push = sims.sum(1)[:, None] * agents / (f_norm**2)[:, None]
    return (pull - push) / agents.shape[0]


# -------------------------------------------------
# Bank-level operations
# -------------------------------------------------
def _inputs(features: RegionFeatures, bank: AgentBank) -> Tuple[torch.Tensor, ...]:
    dtype = bank.agents.dtype
    return (
        bank.agents,
        features.foreground.detach().to(dtype),
        features.background.detach().to(dtype),
    )


def agent_foreground_loss(
    features: RegionFeatures, partition: IntervalPartition, bank: AgentBank
) -> torch.Tensor:
    agents = bank.agents.to(features.foreground.dtype)
    return foreground_loss(agents, features.foreground, features.assignments(partition))


def agent_background_loss(features: RegionFeatures, bank: AgentBank) -> torch.Tensor:
    agents = bank.agents.to(features.background.dtype)
    return background_loss(agents, features.background)


def agent_gradients(
    features: RegionFeatures, partition: IntervalPartition, bank: AgentBank
) -> torch.Tensor:
    """Exact ``d(L_E + L_B)/d f`` for every agent, shape ``(N_a, c)``."""
    if partition.num_agents != bank.num_agents:
        raise ContractViolationError(
            f"partition has {partition.num_agents} intervals, bank has {bank.num_agents} agents"
        )
    agents, fg, bg = _inputs(features, bank)
    assignment = features.assignments(partition)
    return foreground_gradient(agents, fg, assignment) + background_gradient(agents, bg)

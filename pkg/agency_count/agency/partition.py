# agency_count/agency/partition.py
"""
Density-interval partition and the agent allocator.

Agent ``i`` (0-based) owns the interval ``[v_i, v_{i+1})`` where ``v_0 = 0``
(open) and ``v_{N_a} = +inf``. Only the interior borders are stored.
"""
from __future__ import annotations

import bisect
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np
import torch

from agency_count.core.config import PartitionStrategy
from agency_count.core.errors import ContractViolationError

logger = logging.getLogger(__name__)


def interval_centers(borders: Tuple[float, ...]) -> Tuple[float, ...]:
    """
    ``a_0 = v_1 / 2``, interior ``a_i = (v_i + v_{i+1}) / 2``, and the open
    last interval is centered on its left border. One interval -> ``(1.0,)``.
    """
    if not borders:
        return (1.0,)
    centers = [borders[0] / 2.0]
    centers += [(lo + hi) / 2.0 for lo, hi in zip(borders[:-1], borders[1:])]
    centers.append(borders[-1])
    return tuple(float(c) for c in centers)


@dataclass(frozen=True)
class IntervalPartition:
    borders: Tuple[float, ...]
    strategy: str = "quantile"
    fallback: bool = False

    def __post_init__(self) -> None:
        borders = tuple(float(v) for v in self.borders)
        object.__setattr__(self, "borders", borders)
        if borders and borders[0] <= 0:
            raise ContractViolationError(f"first border must be > 0, got {borders[0]}")
        if any(not math.isfinite(v) for v in borders):
            raise ContractViolationError("partition borders must be finite")
        if any(hi <= lo for lo, hi in zip(borders[:-1], borders[1:])):
            raise ContractViolationError(f"borders must be strictly increasing: {borders}")

    @property
    def num_agents(self) -> int:
        return len(self.borders) + 1

    @property
    def centers(self) -> Tuple[float, ...]:
        return interval_centers(self.borders)

    def centers_tensor(self, dtype=torch.float64, device=None) -> torch.Tensor:
        return torch.tensor(self.centers, dtype=dtype, device=device)

    def to_dict(self) -> dict:
        return {
            "borders": list(self.borders),
            "strategy": self.strategy,
            "fallback": self.fallback,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "IntervalPartition":
        return cls(
            borders=tuple(payload["borders"]),
            strategy=payload.get("strategy", "quantile"),
            fallback=bool(payload.get("fallback", False)),
        )


def _span(values: np.ndarray, num_agents: int) -> Tuple[float, float]:
    if values.size == 0:
        return 1.0, float(num_agents)
    lo, hi = float(values.min()), float(values.max())
    if hi <= lo:
        hi = lo * num_agents
    return lo, hi


def _geometric(values: np.ndarray, num_agents: int) -> Tuple[float, ...]:
    lo, hi = _span(values, num_agents)
    return tuple(np.geomspace(lo, hi, num_agents - 1).tolist())


def _linear(values: np.ndarray, num_agents: int) -> Tuple[float, ...]:
    _, hi = _span(values, num_agents)
    return tuple(hi * i / num_agents for i in range(1, num_agents))


def _quantile(values: np.ndarray, num_agents: int) -> Tuple[float, ...] | None:
    if np.unique(values).size < num_agents:
        return None
    qs = np.arange(1, num_agents) / num_agents
    borders = np.quantile(values, qs, method="inverted_cdf")
    if np.unique(borders).size < num_agents - 1:
        return None
    return tuple(float(v) for v in borders)


def build_partition(
    densities: Iterable[float] | np.ndarray,
    num_agents: int,
    strategy: PartitionStrategy = "quantile",
) -> IntervalPartition:
    """
    Build ``num_agents`` density intervals from labeled cell densities.

    Non-positive values (empty cells) are ignored. ``quantile`` needs at least
    ``num_agents`` distinct positive values; otherwise the result falls back to
    ``geometric`` with ``fallback=True``.
    """
    if num_agents < 1:
        raise ContractViolationError(f"num_agents must be >= 1, got {num_agents}")
    if not isinstance(densities, np.ndarray):
        densities = list(densities)
    values = np.asarray(densities, dtype=np.float64).ravel()
    values = values[np.isfinite(values) & (values > 0)]

    if num_agents == 1:
        return IntervalPartition(borders=(), strategy=strategy)

    if strategy == "quantile":
        borders = _quantile(values, num_agents)
        if borders is None:
            logger.warning(
                "Only %d distinct positive densities for %d agents; "
                "falling back to geometric partition",
                np.unique(values).size, num_agents,
            )
            return IntervalPartition(
                borders=_geometric(values, num_agents), strategy="geometric", fallback=True
            )
        partition = IntervalPartition(borders=borders, strategy="quantile")
    elif strategy == "geometric":
        partition = IntervalPartition(borders=_geometric(values, num_agents), strategy=strategy)
    elif strategy == "linear":
        partition = IntervalPartition(borders=_linear(values, num_agents), strategy=strategy)
    else:
        raise ContractViolationError(f"Unknown partition strategy: {strategy}")

    logger.debug("Partition (%s): borders=%s", partition.strategy, partition.borders)
    return partition


def allocate(d: float, partition: IntervalPartition) -> int:
    """Index of the agent whose interval holds density ``d`` (0-based)."""
    d = float(d)
    if not (d > 0 and math.isfinite(d)):
        raise ContractViolationError(
            f"allocate requires a finite density > 0, got {d}", details={"density": d}
        )
    return bisect.bisect_right(partition.borders, d)


def allocate_many(densities: torch.Tensor, partition: IntervalPartition) -> torch.Tensor:
    """Vectorized ``allocate`` -> ``LongTensor`` of agent indices."""
    densities = densities.detach()
    if densities.numel() and not bool(((densities > 0) & torch.isfinite(densities)).all()):
        raise ContractViolationError(
            "allocate requires finite densities > 0",
            details={"min": float(densities.min())},
        )
    if not partition.borders:
        return torch.zeros(densities.shape, dtype=torch.long, device=densities.device)
    borders = torch.tensor(partition.borders, dtype=densities.dtype, device=densities.device)
    return torch.bucketize(densities, borders, right=True)

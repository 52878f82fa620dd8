# agency_count/contrastive/matching.py
from __future__ import annotations

import math
from typing import FrozenSet

import torch

from agency_count.agency.partition import IntervalPartition, allocate, allocate_many
from agency_count.core.config import Distribution, MatchConfig, PositiveRule
from agency_count.core.errors import ContractViolationError

# The Laplace form peaks at exactly this value; the positive threshold shares it.
WEIGHT_PIVOT = 0.25
NORMAL_PEAK = math.sqrt(2.0 / math.pi)


def matching_probability(d, a, distribution: Distribution = "laplace") -> torch.Tensor:
    """
    Likelihood-shaped score of density ``d`` against interval center(s) ``a``.

    laplace: ``1/4 * exp(-|d - a| / 2)``
    normal:  ``sqrt(2/pi) * exp(-2 (d - a)^2)``
    """
    d = torch.as_tensor(d, dtype=torch.float64) if not isinstance(d, torch.Tensor) else d
    a = torch.as_tensor(a, dtype=d.dtype, device=d.device)
    gap = d - a
    if distribution == "laplace":
        return WEIGHT_PIVOT * torch.exp(-gap.abs() / 2.0)
    if distribution == "normal":
        return NORMAL_PEAK * torch.exp(-2.0 * gap**2)
    raise ContractViolationError(f"Unknown distribution: {distribution}")


def uncertainty_weight(omega_hat, clamp: bool = False) -> torch.Tensor:
    """``8 |omega_hat - 0.25|``, optionally capped at 1."""
    omega_hat = (
        omega_hat
        if isinstance(omega_hat, torch.Tensor)
        else torch.as_tensor(omega_hat, dtype=torch.float64)
    )
    weight = 8.0 * (omega_hat - WEIGHT_PIVOT).abs()
    if clamp:
        weight = weight.clamp(max=1.0)
    return weight


def match_weights(omega_hat: torch.Tensor, cfg: MatchConfig) -> torch.Tensor:
    """Per-agent weights for the contrastive sums; ``uniform`` sets every weight to 1."""
    if cfg.weighting == "uniform":
        return torch.ones_like(omega_hat)
    if cfg.weighting != "uncertainty":
        raise ContractViolationError(f"Unknown weighting: {cfg.weighting}")
    return uncertainty_weight(omega_hat, cfg.clamp_weights)


def positive_set(
    d: float,
    partition: IntervalPartition,
    distribution: Distribution = "laplace",
    rule: PositiveRule = "matched_guaranteed",
    threshold: float = WEIGHT_PIVOT,
) -> FrozenSet[int]:
    """Agents whose matching probability reaches ``threshold``; see ``positive_mask``."""
    matched = allocate(d, partition)
    scores = matching_probability(float(d), partition.centers_tensor(), distribution)
    members = {int(i) for i in torch.nonzero(scores >= threshold).flatten().tolist()}
    if rule == "matched_guaranteed":
        members.add(matched)
    elif rule != "verbatim":
        raise ContractViolationError(f"Unknown positive rule: {rule}")
    return frozenset(members)


def positive_mask(
    densities: torch.Tensor,
    partition: IntervalPartition,
    cfg: MatchConfig,
    omega_hat: torch.Tensor | None = None,
) -> torch.Tensor:
    """
    ``(n, N_a)`` boolean mask of positive agents per density. Under
    ``matched_guaranteed`` the allocated agent is always included, so rows
    are never empty.
    """
    if omega_hat is None:
        omega_hat = matching_probability(
            densities[:, None], partition.centers_tensor(densities.dtype, densities.device),
            cfg.distribution,
        )
    mask = omega_hat >= cfg.threshold
    if cfg.positive_rule == "matched_guaranteed":
        matched = allocate_many(densities, partition)
        mask = mask.clone()
        mask[torch.arange(len(densities), device=densities.device), matched] = True
    elif cfg.positive_rule != "verbatim":
        raise ContractViolationError(f"Unknown positive rule: {cfg.positive_rule}")
    return mask

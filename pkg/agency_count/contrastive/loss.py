# agency_count/contrastive/loss.py
"""
Uncertainty-aware contrastive loss against the density agents.

For a foreground feature ``e`` with density ``d``::

    u_i   = exp(s(f_i, e) / tau)
    L_c   = -log((sum_{i in P} w_i u_i + eps) / (sum_j w_j u_j + eps))
    L_C   = sum_e L_c(e) + lambda_b * L_B

Weights ``w`` depend only on densities and are constants for autograd.
Everything is evaluated in log space, so small temperatures cannot overflow.
"""
from __future__ import annotations

import math
from typing import Tuple

import torch

from agency_count.agency.bank import AgentBank
from agency_count.agency.losses import RegionFeatures, background_loss
from agency_count.agency.partition import IntervalPartition, allocate_many
from agency_count.agency.similarity import cosine_matrix, require_nonzero
from agency_count.contrastive.matching import (
    match_weights,
    matching_probability,
    positive_mask,
)
from agency_count.core.config import MatchConfig
from agency_count.core.errors import ContractViolationError
from agency_count.core.report import LossReport


def log_weighted_terms(
    similarities: torch.Tensor,
    weights: torch.Tensor,
    positive: torch.Tensor,
    tau: float,
) -> Tuple[torch.Tensor, torch.Tensor]:
    """Log of ``w_i u_i``; ``-inf`` where the weight is 0, then masked to ``P``."""
    log_w = torch.log(weights.detach().to(similarities.dtype))
    full = log_w + similarities / tau
    masked = torch.where(positive, full, torch.full_like(full, -math.inf))
    return full, masked


def logsumexp_with_floor(log_terms: torch.Tensor, eps: float) -> torch.Tensor:
    floor = torch.full(
        (*log_terms.shape[:-1], 1), math.log(eps), dtype=log_terms.dtype, device=log_terms.device
    )
    return torch.logsumexp(torch.cat([log_terms, floor], dim=-1), dim=-1)


def weighted_info_nce(
    similarities: torch.Tensor,
    weights: torch.Tensor,
    positive_mask: torch.Tensor,
    tau: float,
    eps: float = 1e-12,
) -> torch.Tensor:
    """
    The weighted ratio on precomputed similarities, one loss per leading row.

    Shapes: ``similarities``, ``weights`` and ``positive_mask`` are ``(..., N_a)``.
    """
    if tau <= 0:
        raise ContractViolationError(f"tau must be > 0, got {tau}")
    weights = torch.as_tensor(weights, dtype=similarities.dtype, device=similarities.device)
    positive_mask = torch.as_tensor(positive_mask, dtype=torch.bool, device=similarities.device)
    full, masked = log_weighted_terms(similarities, weights, positive_mask, tau)
    return logsumexp_with_floor(full, eps) - logsumexp_with_floor(masked, eps)


def batch_contrastive_loss(
    foreground: torch.Tensor,
    densities: torch.Tensor,
    agents: torch.Tensor,
    partition: IntervalPartition,
    cfg: MatchConfig,
) -> torch.Tensor:
    """
    Per-feature ``L_c`` for an ``(n, c)`` feature matrix -> ``(n,)``.

    With ``objective="pull"`` each feature only scores ``-s(f_k, e)`` against
    its allocated agent ``k``: no negatives, no weights.
    """
    if foreground.shape[0] == 0:
        return foreground.new_zeros((0,))
    if agents.shape[0] != partition.num_agents:
        raise ContractViolationError(
            f"partition has {partition.num_agents} intervals, got {agents.shape[0]} agents"
        )
    densities = densities.detach().to(torch.float64)
    centers = partition.centers_tensor(torch.float64, densities.device)
    omega_hat = matching_probability(densities[:, None], centers, cfg.distribution)
    sims = cosine_matrix(foreground, agents.to(foreground.dtype))
    if cfg.objective == "pull":
        matched = allocate_many(densities, partition)
        return -sims[torch.arange(len(densities), device=sims.device), matched]

    weights = match_weights(omega_hat, cfg)
    positive = positive_mask(densities, partition, cfg, omega_hat=omega_hat)
    return weighted_info_nce(sims, weights, positive, cfg.tau, cfg.eps_num)


def contrastive_loss(
    e: torch.Tensor,
    d: float,
    bank: AgentBank,
    partition: IntervalPartition,
    cfg: MatchConfig,
) -> torch.Tensor:
    e = torch.as_tensor(e, dtype=torch.float64) if not isinstance(e, torch.Tensor) else e
    require_nonzero(e.reshape(1, -1), "e")
    d_tensor = torch.tensor([float(d)], dtype=torch.float64)
    return batch_contrastive_loss(
        e.reshape(1, -1), d_tensor, bank.agents, partition, cfg
    )[0]


def total_agency_loss(
    features: RegionFeatures,
    bank: AgentBank,
    partition: IntervalPartition,
    cfg: MatchConfig,
) -> Tuple[torch.Tensor, LossReport]:
    """``L_C = sum_e L_c(e) + lambda_b * L_B``; agents are constants here."""
    agents = bank.agents
    per_feature = batch_contrastive_loss(
        features.foreground, features.densities, agents, partition, cfg
    )
    l_c = per_feature.sum() if per_feature.numel() else features.foreground.new_zeros(())
    l_b = background_loss(agents.to(features.background.dtype), features.background)
    total = l_c + cfg.lambda_b * l_b

    report = LossReport()
    report.add("L_c_sum", l_c)
    report.add("L_B", l_b, cfg.lambda_b)
    report.add("L_C", total)
    return total, report

# agency_count/contrastive/gradients.py
from __future__ import annotations

import torch

from agency_count.agency.partition import IntervalPartition, allocate_many
from agency_count.agency.similarity import require_nonzero
from agency_count.contrastive.loss import log_weighted_terms, logsumexp_with_floor
from agency_count.contrastive.matching import (
    match_weights,
    matching_probability,
    positive_mask,
)
from agency_count.core.config import MatchConfig


def batch_contrastive_agent_gradient(
    foreground: torch.Tensor,
    densities: torch.Tensor,
    agents: torch.Tensor,
    partition: IntervalPartition,
    cfg: MatchConfig,
) -> torch.Tensor:
    """
    Closed-form ``d(sum_e L_c(e)) / d f_i`` for every agent, ``(N_a, c)``.

    Per feature and agent the coefficient on ``ds/df_i`` is
    ``(w_i u_i / D - [i in P] w_i u_i / N) / tau``; for a negative agent this
    is the familiar ``(1/tau) * w_i u_i / sum_j w_j u_j``. Under
    ``objective="pull"`` the coefficient is ``-1`` on the allocated agent only.
    """
    grad = torch.zeros_like(agents)
    if foreground.shape[0] == 0:
        return grad

    e = foreground.detach().to(agents.dtype)
    densities = densities.detach().to(torch.float64)
    centers = partition.centers_tensor(torch.float64, densities.device)
    omega_hat = matching_probability(densities[:, None], centers, cfg.distribution)
    e_norm = require_nonzero(e, "foreground")
    f_norm = require_nonzero(agents, "agent")
    sims = (e @ agents.T) / (e_norm[:, None] * f_norm[None, :])

    if cfg.objective == "pull":
        matched = allocate_many(densities, partition)
        coeff = torch.zeros_like(sims)
        coeff[torch.arange(len(densities), device=sims.device), matched] = -1.0
    else:
        weights = match_weights(omega_hat, cfg)
        positive = positive_mask(densities, partition, cfg, omega_hat=omega_hat)
        full, masked = log_weighted_terms(sims, weights, positive, cfg.tau)
        log_den = logsumexp_with_floor(full, cfg.eps_num)[:, None]
        log_num = logsumexp_with_floor(masked, cfg.eps_num)[:, None]
        coeff = (torch.exp(full - log_den) - torch.exp(masked - log_num)) / cfg.tau

    e_unit = e / e_norm[:, None]
    return (coeff.T @ e_unit) / f_norm[:, None] - (
        (coeff * sims).sum(0)[:, None] * agents / (f_norm**2)[:, None]
    )


def contrastive_agent_gradient(
    e: torch.Tensor,
    d: float,
    agents: torch.Tensor,
    partition: IntervalPartition,
    cfg: MatchConfig,
) -> torch.Tensor:
    """Gradient of one feature's ``L_c`` with respect to each agent."""
    return batch_contrastive_agent_gradient(
        e.reshape(1, -1),
        torch.tensor([float(d)], dtype=torch.float64),
        agents,
        partition,
        cfg,
    )

# agency_count/losses/bayes.py
"""
Bayesian point supervision with noise depression.

Each annotation ``j`` has an expected count ``E_j = sum_i p_ij D_i`` where
``p_ij`` is the posterior of cell ``i`` belonging to annotation ``j``. The
loss sums the count gaps ``eps_j = |1 - E_j|``, each scaled by the constant
``exp(-beta * eps_j)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np
import torch

from agency_count.core.errors import ContractViolationError, NonFiniteError
from agency_count.datasets.rasterize import cell_centers


@dataclass(frozen=True, eq=False)
class PosteriorMatrix:
    """``p`` is ``(num_cells, num_points)``, rows ordered like ``cell_centers``."""

    p: torch.Tensor
    sigma: float
    stride: int

    @property
    def num_cells(self) -> int:
        return int(self.p.shape[0])

    @property
    def num_points(self) -> int:
        return int(self.p.shape[1])

    @property
    def is_empty(self) -> bool:
        return self.num_points == 0


def posterior_matrix(
    points: np.ndarray,
    image_size: Tuple[int, int],
    stride: int,
    sigma: float,
) -> PosteriorMatrix:
    if sigma <= 0:
        raise ContractViolationError(f"sigma must be > 0, got {sigma}")
    centers = torch.from_numpy(cell_centers(image_size, stride))
    points_t = torch.as_tensor(np.asarray(points, dtype=np.float64).reshape(-1, 2))
    if points_t.shape[0] == 0:
        return PosteriorMatrix(
            p=torch.zeros((centers.shape[0], 0), dtype=torch.float64),
            sigma=sigma,
            stride=stride,
        )
    dist2 = torch.cdist(centers, points_t).pow(2)
    p = torch.softmax(-dist2 / (2.0 * sigma**2), dim=1)
    return PosteriorMatrix(p=p, sigma=sigma, stride=stride)


def expected_counts(density: torch.Tensor, posterior: PosteriorMatrix) -> torch.Tensor:
    flat = density.reshape(-1)
    if flat.shape[0] != posterior.num_cells:
        raise ContractViolationError(
            f"density has {flat.shape[0]} cells, posterior expects {posterior.num_cells}"
        )
    if not bool(torch.isfinite(flat).all()):
        raise NonFiniteError("non-finite density map", details={"term": "L_ND"})
    return posterior.p.to(flat.dtype).T @ flat


def count_gaps(density: torch.Tensor, posterior: PosteriorMatrix) -> torch.Tensor:
    """``eps_j`` per annotation."""
    return (1.0 - expected_counts(density, posterior)).abs()


def nd_bayes_loss(
    density: torch.Tensor, posterior: PosteriorMatrix, beta: float
) -> torch.Tensor:
    if posterior.is_empty:
        expected_counts(density, posterior)
        return density.sum() * 0.0
    gaps = count_gaps(density, posterior)
    return (torch.exp(-beta * gaps.detach()) * gaps).sum()


def plain_bayes_loss(density: torch.Tensor, posterior: PosteriorMatrix) -> torch.Tensor:
    if posterior.is_empty:
        expected_counts(density, posterior)
        return density.sum() * 0.0
    return count_gaps(density, posterior).sum()

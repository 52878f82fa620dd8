# agency_count/losses/compose.py
from __future__ import annotations

from typing import Tuple

import torch

from agency_count.core.config import LossWeights
from agency_count.core.errors import ContractViolationError, NonFiniteError
from agency_count.core.report import LossReport

Term = float | torch.Tensor


def mask_loss(mask_pred: torch.Tensor, mask_gt: torch.Tensor) -> torch.Tensor:
    """Euclidean norm of the residual between predicted and target masks."""
    if tuple(mask_pred.shape) != tuple(mask_gt.shape):
        raise ContractViolationError(
            f"mask shapes differ: {tuple(mask_pred.shape)} vs {tuple(mask_gt.shape)}"
        )
    return torch.linalg.vector_norm(mask_pred - mask_gt.to(mask_pred.dtype))


def compose_losses(
    l_nd: Term,
    l_m: Term,
    l_c_labeled: Term,
    l_c_unlabeled: Term,
    weights: LossWeights,
) -> Tuple[Term, Term, Term, LossReport]:
    """
    L_label   = L_ND + lambda_m * L_m + lambda_c * L_C(labeled)
    L_unlabel = lambda_c * L_C(unlabeled)
    L         = L_label + lambda_u * L_unlabel
    """
    report = LossReport()
    report.add("L_ND", l_nd, 1.0)
    report.add("L_m", l_m, weights.lambda_m)
    report.add("L_C_labeled", l_c_labeled, weights.lambda_c)
    report.add("L_C_unlabeled", l_c_unlabeled, weights.lambda_c)

    bad = report.non_finite_terms()
    if bad:
        raise NonFiniteError(f"non-finite loss term(s): {', '.join(bad)}", details={"terms": bad})

    l_label = l_nd + weights.lambda_m * l_m + weights.lambda_c * l_c_labeled
    l_unlabel = weights.lambda_c * l_c_unlabeled
    total = l_label + weights.lambda_u * l_unlabel

    report.add("L_label", l_label)
    report.add("L_unlabel", l_unlabel, weights.lambda_u)
    report.add("L", total)
    return l_label, l_unlabel, total, report

# agency_count/core/metrics.py
from __future__ import annotations

from typing import Sequence, Tuple

import numpy as np

from agency_count.core.errors import ContractViolationError


def count_metrics(gt: Sequence[float], pred: Sequence[float]) -> Tuple[float, float]:
    """(MAE, MSE) of count errors; MSE is the root of the mean squared error."""
    gt_arr = np.asarray(gt, dtype=np.float64)
    pred_arr = np.asarray(pred, dtype=np.float64)
    if gt_arr.shape != pred_arr.shape:
        raise ContractViolationError(
            f"{gt_arr.shape[0]} targets vs {pred_arr.shape[0]} predictions"
        )
    if gt_arr.size == 0:
        raise ContractViolationError("cannot score an empty set of images")
    errors = pred_arr - gt_arr
    return float(np.abs(errors).mean()), float(np.sqrt((errors**2).mean()))

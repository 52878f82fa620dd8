# agency_count/evalkit/evaluate.py
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np
from PIL import Image

from agency_count.core.errors import ContractViolationError
from agency_count.core.metrics import count_metrics
from agency_count.datasets.models import SceneSample
from agency_count.network.model import CountingModel, predict_density
from agency_count.training.checkpoint import Checkpoint, load_checkpoint

logger = logging.getLogger(__name__)


@dataclass
class EvalResult:
    mae: float
    mse: float
    per_image: List[Tuple[str, float, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "MAE": self.mae,
            "MSE": self.mse,
            "per_image": [
                {"id": sid, "gt_count": gt, "pred_count": pred} for sid, gt, pred in self.per_image
            ],
        }


def save_density_map(density: np.ndarray, path: Path) -> None:
    """Min-max scaled 8-bit PNG of one predicted grid."""
    peak = float(density.max())
    scaled = density / peak if peak > 0 else density
    Image.fromarray(np.round(scaled * 255).astype(np.uint8)).save(path, format="PNG")


def evaluate(
    checkpoint: Checkpoint | CountingModel | str | Path,
    samples: Sequence[SceneSample],
    *,
    save_maps: str | Path | None = None,
) -> EvalResult:
    """
    Predicted count is the sum of the density grid; MAE is the mean absolute
    count error and MSE the root mean squared one.
    """
    if not samples:
        raise ContractViolationError("evaluation split is empty")

    if isinstance(checkpoint, CountingModel):
        model = checkpoint
    else:
        if not isinstance(checkpoint, Checkpoint):
            checkpoint = load_checkpoint(checkpoint)
        model = checkpoint.build_model()

    maps_dir = Path(save_maps) if save_maps is not None else None
    if maps_dir is not None:
        maps_dir.mkdir(parents=True, exist_ok=True)

    per_image = []
    for sample in samples:
        density = predict_density(model, sample)
        per_image.append((sample.id, float(sample.count), float(density.sum())))
        if maps_dir is not None:
            save_density_map(density, maps_dir / f"{sample.id}.png")

    mae, mse = count_metrics([gt for _, gt, _ in per_image], [pred for _, _, pred in per_image])
    logger.info("Evaluated %d images: MAE %.3f MSE %.3f", len(per_image), mae, mse)
    return EvalResult(mae=mae, mse=mse, per_image=per_image)

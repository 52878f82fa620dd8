# agency_count/evalkit/ablate.py
"""
Cumulative component ladder. Each rung switches one more component on top of
the rung before it, trains once at ``base.train.seed`` and scores the test
split:

    baseline          labeled scenes only, no transformer, no agents, beta = 0
    + transformer     foreground transformer layers
    + learnable agent unlabeled scenes, features pulled onto their allocated agent
    + contrastive     contrastive objective against all agents, uniform weights
    + uncertainty     uncertainty-aware weights
    + nd loss         noise depression in the count loss

A component the base settings switch off (``lambda_c = 0``, ``beta = 0``,
``attn_layers = 0``, ``lambda_u = 0``) is switched on with the default value.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Tuple

from agency_count.core.config import LossWeights, ModelConfig, Settings
from agency_count.core.errors import ContractViolationError
from agency_count.datasets.models import SceneDataset
from agency_count.evalkit.sweep import SweepCell, SweepResult, train_and_score, write_results

logger = logging.getLogger(__name__)

ABLATION_PARAM = "ablation"


@dataclass(frozen=True)
class AblationRung:
    name: str
    label: str
    overrides: Dict[str, object]


def ablation_ladder(base: Settings) -> List[AblationRung]:
    loss_defaults, model_defaults = LossWeights(), ModelConfig()
    return [
        AblationRung(
            "baseline",
            "baseline",
            {
                "model.attn_layers": 0,
                "train.labeled_only": True,
                "loss.lambda_c": 0.0,
                "loss.beta": 0.0,
            },
        ),
        AblationRung(
            "transformer",
            "+ transformer",
            {"model.attn_layers": base.model.attn_layers or model_defaults.attn_layers},
        ),
        AblationRung(
            "learnable_agent",
            "+ learnable agent",
            {
                "train.labeled_only": False,
                "loss.lambda_u": base.loss.lambda_u or loss_defaults.lambda_u,
                "loss.lambda_c": base.loss.lambda_c or loss_defaults.lambda_c,
                "contrastive.objective": "pull",
            },
        ),
        AblationRung(
            "contrastive",
            "+ contrastive",
            {"contrastive.objective": "contrastive", "contrastive.weighting": "uniform"},
        ),
        AblationRung(
            "uncertainty",
            "+ uncertainty",
            {"contrastive.weighting": "uncertainty"},
        ),
        AblationRung(
            "nd_loss",
            "+ nd loss",
            {"loss.beta": base.loss.beta or loss_defaults.beta},
        ),
    ]


def ladder_overrides(base: Settings) -> List[Tuple[AblationRung, Dict[str, object]]]:
    """Overrides of every rung, each carrying those of all rungs before it."""
    merged: Dict[str, object] = {}
    out = []
    for rung in ablation_ladder(base):
        merged = {**merged, **rung.overrides}
        out.append((rung, merged))
    return out


@dataclass
class AblationResult(SweepResult):
    labels: Dict[str, str] | None = None

    def table_markdown(self) -> str:
        """One row per rung: label, MAE, MSE."""

        def fmt(value) -> str:
            return "failed" if value is None else f"{value:.2f}"

        labels = self.labels or {}
        lines = ["| Components | MAE | MSE |", "|---|---|---|"]
        lines += [
            f"| {labels.get(str(c.value), c.value)} | {fmt(c.mae)} | {fmt(c.mse)} |"
            for c in self.cells
        ]
        return "\n".join(lines) + "\n"


def ablate(
    base: Settings,
    dataset: SceneDataset,
    *,
    out_dir: str | Path | None = None,
) -> AblationResult:
    """Train and score every rung of the ladder; failed rungs are recorded, not raised."""
    if not dataset.test:
        raise ContractViolationError("ablation needs a non-empty test split")

    cells, labels = [], {}
    for rung, values in ladder_overrides(base):
        labels[rung.name] = rung.label
        cell = SweepCell(param=ABLATION_PARAM, value=rung.name, seed=base.train.seed)
        cell_dir = Path(out_dir) / "runs" / rung.name if out_dir is not None else None
        cells.append(
            train_and_score(
                cell, lambda values=values: base.with_values(values), dataset, out_dir=cell_dir
            )
        )

    result = AblationResult(param=ABLATION_PARAM, cells=cells, labels=labels)
    logger.info(
        "ablation: %d/%d rungs ok", sum(c.status == "ok" for c in cells), len(cells)
    )
    if out_dir is not None:
        write_results(result, out_dir)
    return result

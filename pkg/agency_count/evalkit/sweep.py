# agency_count/evalkit/sweep.py
from __future__ import annotations

import csv
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Dict, List, Literal, Optional, Sequence

from agency_count.core.config import Settings
from agency_count.core.errors import AgencyCountError, ContractViolationError
from agency_count.datasets.models import SceneDataset
from agency_count.evalkit.evaluate import evaluate
from agency_count.training.trainer import run_training

logger = logging.getLogger(__name__)

SweepParam = Literal[
    "beta", "lambda_c", "tau", "lambda_m", "lambda_u", "distribution", "attn_layers"
]

SWEEP_KEYS: Dict[str, str] = {
    "beta": "loss.beta",
    "lambda_c": "loss.lambda_c",
    "lambda_m": "loss.lambda_m",
    "lambda_u": "loss.lambda_u",
    "tau": "contrastive.tau",
    "distribution": "contrastive.distribution",
    "attn_layers": "model.attn_layers",
}

SWEEP_PRESETS: Dict[str, List] = {
    "beta": [0, 0.1, 0.5, 1, 2, 5, 10],
    "lambda_c": [0, 0.001, 0.01, 0.05, 0.1, 0.5, 1],
    "tau": [0.01, 0.05, 0.07, 0.1, 0.2, 0.5, 1],
    "lambda_m": [0.01, 0.05, 0.1, 0.5, 1],
    "lambda_u": [0, 0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1],
    "distribution": ["laplace", "normal"],
    "attn_layers": [0, 1, 2],
}

RESULT_COLUMNS = ["param", "value", "seed", "mae", "mse", "status", "message"]


@dataclass
class SweepCell:
    param: str
    value: float | str
    seed: int
    mae: Optional[float] = None
    mse: Optional[float] = None
    status: str = "ok"
    message: str = ""


@dataclass
class SweepResult:
    param: str
    cells: List[SweepCell]

    def table_markdown(self) -> str:
        """Param row, MAE row, MSE row; one column per value."""

        def fmt(value) -> str:
            return "failed" if value is None else f"{value:.2f}"

        header = f"| {self.param} | " + " | ".join(str(c.value) for c in self.cells) + " |"
        rule = "|---|" + "---|" * len(self.cells)
        mae = "| MAE | " + " | ".join(fmt(c.mae) for c in self.cells) + " |"
        mse = "| MSE | " + " | ".join(fmt(c.mse) for c in self.cells) + " |"
        return "\n".join([header, rule, mae, mse]) + "\n"


def _coerce(param: str, value):
    if param == "distribution":
        return str(value)
    if param == "attn_layers":
        return int(value)
    return float(value)


def run_cell(
    param: str,
    value,
    dataset: SceneDataset,
    base: Settings,
    *,
    out_dir: Path | None = None,
) -> SweepCell:
    """One train+evaluate at ``param=value``; failures are recorded, not raised."""
    cell = SweepCell(param=param, value=value, seed=base.train.seed)
    return train_and_score(
        cell, lambda: base.with_value(SWEEP_KEYS[param], value), dataset, out_dir=out_dir
    )


def train_and_score(
    cell: SweepCell,
    build_settings: Callable[[], Settings],
    dataset: SceneDataset,
    *,
    out_dir: Path | None = None,
) -> SweepCell:
    """Fill ``cell`` with test-split MAE/MSE, or mark it failed."""
    try:
        settings = build_settings()
        run = run_training(
            dataset, settings, out_dir=out_dir, run_name=f"{cell.param}={cell.value}"
        )
        result = evaluate(run.model, dataset.test)
        cell.mae, cell.mse = result.mae, result.mse
        logger.info(
            "%s=%s: MAE %.3f MSE %.3f", cell.param, cell.value, result.mae, result.mse
        )
    except (AgencyCountError, ValueError) as exc:
        cell.status = "failed"
        cell.message = str(exc)
        logger.warning("%s=%s failed: %s", cell.param, cell.value, exc)
    return cell


def write_results(result: SweepResult, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "results.csv").open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=RESULT_COLUMNS)
        writer.writeheader()
        for cell in result.cells:
            writer.writerow(asdict(cell))
    (out / "table.md").write_text(result.table_markdown(), encoding="utf-8")
    return out


def sweep(
    param: SweepParam,
    values: Sequence | None,
    base: Settings,
    dataset: SceneDataset,
    *,
    out_dir: str | Path | None = None,
) -> SweepResult:
    """
    Train and evaluate once per value, all at ``base.train.seed``, scoring on
    the test split. ``values=None`` uses the preset for ``param``.
    """
    if param not in SWEEP_KEYS:
        raise ContractViolationError(f"Unknown sweep parameter: {param}")
    values = list(SWEEP_PRESETS[param] if values is None else values)
    if not values:
        raise ContractViolationError("sweep needs at least one value")
    if not dataset.test:
        raise ContractViolationError("sweep needs a non-empty test split")

    cells = []
    for value in values:
        value = _coerce(param, value)
        cell_dir = Path(out_dir) / "runs" / f"{param}={value}" if out_dir is not None else None
        cells.append(run_cell(param, value, dataset, base, out_dir=cell_dir))

    result = SweepResult(param=param, cells=cells)
    if out_dir is not None:
        write_results(result, out_dir)
    return result

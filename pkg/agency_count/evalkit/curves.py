# agency_count/evalkit/curves.py
from __future__ import annotations

import csv
from pathlib import Path
from typing import Dict, List, Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from agency_count.core.errors import ContractViolationError  # noqa: E402
from agency_count.core.report import LossReport  # noqa: E402
from agency_count.training.trainer import EpochLog  # noqa: E402

CURVE_COLUMNS = ["run", "epoch", "train_mae", "train_mse"]


def emit_curves(runs: Mapping[str, Sequence[EpochLog]], out_dir: str | Path) -> Dict[str, Path]:
    """
    Write ``curves.csv`` (the source of truth) and ``curves.png`` plotted
    from it: MAE and MSE per epoch, one line per run.
    """
    if not runs:
        raise ContractViolationError("emit_curves needs at least one run")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    csv_path = out / "curves.csv"
    with csv_path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(CURVE_COLUMNS)
        for name, logs in runs.items():
            for log in logs:
                writer.writerow([name, log.epoch, repr(log.train_mae), repr(log.train_mse)])

    png_path = out / "curves.png"
    plot_curves(load_curves_csv(csv_path), png_path)
    return {"csv": csv_path, "png": png_path}


def load_curves_csv(path: str | Path) -> Dict[str, Dict[str, List[float]]]:
    """``run -> {"epoch": [...], "train_mae": [...], "train_mse": [...]}``."""
    curves: Dict[str, Dict[str, List[float]]] = {}
    with Path(path).open(newline="", encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            series = curves.setdefault(
                row["run"], {"epoch": [], "train_mae": [], "train_mse": []}
            )
            series["epoch"].append(int(row["epoch"]))
            series["train_mae"].append(float(row["train_mae"]))
            series["train_mse"].append(float(row["train_mse"]))
    return curves


def load_epoch_logs(path: str | Path, run: str | None = None) -> List[EpochLog]:
    """Read the MAE/MSE columns of an ``epochs.csv`` back into logs."""
    logs = []
    with Path(path).open(newline="", encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            logs.append(
                EpochLog(
                    epoch=int(row["epoch"]),
                    train_mae=float(row["train_mae"]),
                    train_mse=float(row["train_mse"]),
                    losses=LossReport(),
                    wall_time=float(row.get("wall_time") or 0.0),
                    run=run or row["run"],
                )
            )
    return logs


def plot_curves(curves: Mapping[str, Mapping[str, List[float]]], path: Path) -> Path:
    fig, (ax_mae, ax_mse) = plt.subplots(1, 2, figsize=(10, 4), sharex=True)
    for name, series in curves.items():
        ax_mae.plot(series["epoch"], series["train_mae"], marker="o", label=name)
        ax_mse.plot(series["epoch"], series["train_mse"], marker="o", label=name)
    ax_mae.set_title("Training MAE")
    ax_mse.set_title("Training MSE")
    for ax in (ax_mae, ax_mse):
        ax.set_xlabel("epoch")
        ax.grid(alpha=0.3)
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path

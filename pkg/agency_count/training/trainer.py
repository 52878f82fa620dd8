# agency_count/training/trainer.py
"""
Semi-supervised training loop.

Each step runs one joint model update on

    L = mean_labeled(L_ND + lambda_m L_m + lambda_c L_C)
        + lambda_u * mean_unlabeled(lambda_c L_C)

followed by one agent update on the accumulated closed-form gradient of
``L_E + L_B`` (unlabeled samples scaled by ``lambda_u``). Unlabeled samples
reach the backbone only.
"""
from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import torch
from torch import nn

from agency_count.agency.bank import AgentBank
from agency_count.agency.losses import (
    RegionFeatures,
    agent_background_loss,
    agent_foreground_loss,
    agent_gradients,
)
from agency_count.agency.partition import IntervalPartition, build_partition
from agency_count.contrastive.loss import total_agency_loss
from agency_count.core.config import Settings
from agency_count.core.errors import (
    AgencyCountError,
    ContractViolationError,
    NonFiniteError,
    TrainingStepError,
)
from agency_count.core.metrics import count_metrics
from agency_count.core.report import LossReport
from agency_count.datasets.augment import augment
from agency_count.datasets.models import AugmentationConfig, SceneDataset, SceneSample
from agency_count.datasets.prepared import PreparedScene, prepare_scene, stack_images
from agency_count.datasets.rasterize import rasterize_density
from agency_count.losses.bayes import nd_bayes_loss, posterior_matrix
from agency_count.losses.compose import compose_losses, mask_loss
from agency_count.network.model import CountingModel, build_model, predict_counts
from agency_count.network.split import attach_density_source
from agency_count.training.batching import augmentation_seed, epoch_batches
from agency_count.training.checkpoint import Checkpoint, capture, save_checkpoint

logger = logging.getLogger(__name__)

EPOCH_COLUMNS = ["run", "epoch", "train_mae", "train_mse", "wall_time"]


@dataclass
class EpochLog:
    epoch: int
    train_mae: float
    train_mse: float
    losses: LossReport
    wall_time: float = field(default=0.0, compare=False)
    run: str = "semi"

    def row(self) -> dict:
        row = {
            "run": self.run,
            "epoch": self.epoch,
            "train_mae": self.train_mae,
            "train_mse": self.train_mse,
            "wall_time": self.wall_time,
        }
        row.update(self.losses.terms)
        return row


@dataclass
class TrainingRun:
    checkpoint: Checkpoint
    logs: List[EpochLog]
    model: CountingModel
    bank: AgentBank
    partition: IntervalPartition
    initial_mae: float
    initial_mse: float

    @property
    def run(self) -> str:
        return self.checkpoint.run


def uses_unlabeled(settings: Settings) -> bool:
    return settings.loss.lambda_u > 0 and not settings.train.labeled_only


def _assert_head_untouched(model: CountingModel) -> None:
    touched = [
        name
        for name, param in model.head.named_parameters()
        if param.grad is not None and bool(param.grad.abs().sum() > 0)
    ]
    if touched:
        raise ContractViolationError(
            "regression head received gradient from unlabeled loss",
            details={"parameters": touched},
        )


def _agent_loss(
    region: RegionFeatures, partition: IntervalPartition, bank: AgentBank
) -> float:
    with torch.no_grad():
        return float(
            agent_foreground_loss(region, partition, bank) + agent_background_loss(region, bank)
        )


def train_step(
    batch: Sequence[PreparedScene],
    model: CountingModel,
    optimizer: torch.optim.Optimizer,
    bank: AgentBank,
    partition: IntervalPartition,
    settings: Settings,
) -> Tuple[CountingModel, AgentBank, LossReport]:
    weights = settings.loss
    match = settings.contrastive
    floor = settings.data.density_floor

    labeled = [scene for scene in batch if scene.is_labeled]
    unlabeled: List[PreparedScene] = []
    if uses_unlabeled(settings):
        unlabeled = [scene for scene in batch if not scene.is_labeled]
    if not labeled and not unlabeled:
        return model, bank, LossReport()

    model.train()
    optimizer.zero_grad(set_to_none=True)
    zero = torch.zeros(())
    agent_grad = torch.zeros_like(bank.agents)
    agent_loss = 0.0

    l_nd, l_m, l_c_lab = zero, zero, zero
    if labeled:
        outputs = model(stack_images(labeled))
        nd_terms, m_terms, c_terms = [], [], []
        for index, scene in enumerate(labeled):
            out = outputs[index]
            posterior = posterior_matrix(scene.points, scene.size, model.stride, weights.sigma)
            nd_terms.append(nd_bayes_loss(out.density, posterior, weights.beta))
            m_terms.append(mask_loss(out.mask_prob, torch.from_numpy(scene.mask.values)))
            region = attach_density_source(scene, out, partition, floor)
            l_c, _ = total_agency_loss(region, bank, partition, match)
            c_terms.append(l_c)
            agent_grad += agent_gradients(region, partition, bank)
            agent_loss += _agent_loss(region, partition, bank)
        l_nd = torch.stack(nd_terms).mean()
        l_m = torch.stack(m_terms).mean()
        l_c_lab = torch.stack(c_terms).mean()

    l_c_unl = zero
    if unlabeled:
        outputs = model(stack_images(unlabeled), head_grad=False)
        c_terms = []
        for index, scene in enumerate(unlabeled):
            region = attach_density_source(scene, outputs[index], partition, floor)
            l_c, _ = total_agency_loss(region, bank, partition, match)
            c_terms.append(l_c)
            agent_grad += weights.lambda_u * agent_gradients(region, partition, bank)
            agent_loss += weights.lambda_u * _agent_loss(region, partition, bank)
        l_c_unl = torch.stack(c_terms).mean()

    l_label, l_unlabel, _, report = compose_losses(l_nd, l_m, l_c_lab, l_c_unl, weights)

    unlabeled_part = weights.lambda_u * l_unlabel
    if unlabeled and unlabeled_part.requires_grad:
        unlabeled_part.backward()
        if settings.train.debug_purity:
            _assert_head_untouched(model)
    if labeled and l_label.requires_grad:
        l_label.backward()
    if not bool(torch.isfinite(agent_grad).all()):
        optimizer.zero_grad(set_to_none=True)
        raise NonFiniteError("non-finite agent gradient", details={"term": "L_A"})
    optimizer.step()

    bank.step(agent_grad)
    report.add("L_A", agent_loss)
    logger.debug("step losses: %s", {k: round(v, 6) for k, v in report.terms.items()})
    return model, bank, report


def labeled_cell_densities(samples: Sequence[SceneSample], stride: int) -> np.ndarray:
    grids = [rasterize_density(s.points, stride, s.size).values.ravel() for s in samples]
    return np.concatenate(grids) if grids else np.zeros(0)


def write_epoch_csv(logs: Sequence[EpochLog], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    term_columns = sorted({name for log in logs for name in log.losses.terms})
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=EPOCH_COLUMNS + term_columns)
        writer.writeheader()
        for log in logs:
            writer.writerow(log.row())
    return path


def run_training(
    dataset: SceneDataset,
    settings: Settings,
    *,
    out_dir: str | Path | None = None,
    run_name: Optional[str] = None,
    backbone: Optional[nn.Module] = None,
) -> TrainingRun:
    cfg = settings.train
    run = run_name or ("labeled_only" if cfg.labeled_only else "semi")
    labeled = dataset.labeled
    unlabeled = dataset.unlabeled
    if not labeled:
        raise ContractViolationError("training needs at least one labeled scene")

    stride = settings.data.stride
    partition = build_partition(
        labeled_cell_densities(labeled, stride),
        settings.agency.num_agents,
        settings.agency.partition_strategy,
    )
    model = build_model(settings.model, backbone)
    bank = AgentBank.initialize(
        settings.agency.num_agents, settings.model.channels, settings.agency.agent_lr, seed=cfg.seed
    )
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.model_lr)
    initial_mae, initial_mse = count_metrics(
        [s.count for s in labeled], predict_counts(model, labeled)
    )

    include_unlabeled = uses_unlabeled(settings)
    logger.info(
        "Training run '%s': %d labeled, %d unlabeled (%s), %d epochs, partition=%s%s",
        run, len(labeled), len(unlabeled), "used" if include_unlabeled else "skipped",
        cfg.epochs, partition.strategy, " (fallback)" if partition.fallback else "",
    )

    out_path = Path(out_dir) if out_dir is not None else None
    logs: List[EpochLog] = []
    for epoch in range(1, cfg.epochs + 1):
        started = time.perf_counter()
        reports: List[LossReport] = []
        batches = epoch_batches(
            len(labeled), len(unlabeled), cfg.batch_labeled, cfg.batch_unlabeled,
            cfg.seed, epoch, include_unlabeled=include_unlabeled,
        )
        for step, indices in enumerate(batches):
            aug = AugmentationConfig(
                scale_range=settings.data.scale_range,
                hflip_prob=settings.data.hflip_prob,
                crop_size=settings.data.crop_size,
                seed=augmentation_seed(cfg.seed, epoch, step),
            )
            batch = [
                prepare_scene(augment(labeled[i], aug), stride, settings.data.mask_dilation)
                for i in indices.labeled
            ] + [
                prepare_scene(augment(unlabeled[i], aug), stride, settings.data.mask_dilation)
                for i in indices.unlabeled
            ]
            try:
                model, bank, report = train_step(batch, model, optimizer, bank, partition, settings)
            except (AgencyCountError, RuntimeError) as exc:
                cause = getattr(exc, "error_code", type(exc).__name__)
                raise TrainingStepError(
                    f"epoch {epoch}, step {step}: {exc}",
                    details={"epoch": epoch, "step": step, "cause": cause},
                ) from exc
            reports.append(report)

        mae, mse = count_metrics([s.count for s in labeled], predict_counts(model, labeled))
        log = EpochLog(
            epoch=epoch,
            train_mae=mae,
            train_mse=mse,
            losses=LossReport.mean(reports),
            wall_time=time.perf_counter() - started,
            run=run,
        )
        logs.append(log)
        logger.info(
            "[%s] epoch %d: train MAE %.3f MSE %.3f L %.4f (%.1fs)",
            run, epoch, mae, mse, log.losses.terms.get("L", float("nan")), log.wall_time,
        )

        if out_path is not None and cfg.checkpoint_every and epoch % cfg.checkpoint_every == 0:
            save_checkpoint(
                capture(epoch=epoch, settings=settings, model=model, optimizer=optimizer,
                        bank=bank, partition=partition, run=run),
                out_path / "checkpoints" / f"epoch_{epoch:04d}.pt",
            )

    final = capture(
        epoch=cfg.epochs, settings=settings, model=model, optimizer=optimizer,
        bank=bank, partition=partition, run=run,
    )
    if out_path is not None:
        save_checkpoint(final, out_path / "final.pt")
        bank.save(out_path / "agents.json")
        write_epoch_csv(logs, out_path / "epochs.csv")

    return TrainingRun(
        checkpoint=final,
        logs=logs,
        model=model,
        bank=bank,
        partition=partition,
        initial_mae=initial_mae,
        initial_mse=initial_mse,
    )


def labeled_only_baseline(
    dataset: SceneDataset,
    settings: Settings,
    *,
    out_dir: str | Path | None = None,
    backbone: Optional[nn.Module] = None,
) -> TrainingRun:
    """Same pipeline with unlabeled scenes skipped and ``lambda_u`` forced to 0."""
    baseline = settings.with_value("train.labeled_only", True).with_value("loss.lambda_u", 0.0)
    return run_training(
        dataset, baseline, out_dir=out_dir, run_name="labeled_only", backbone=backbone
    )

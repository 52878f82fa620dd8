# agency_count/training/checkpoint.py
from __future__ import annotations

import logging
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import torch

from agency_count.agency.bank import AgentBank
from agency_count.agency.partition import IntervalPartition
from agency_count.core.config import ModelConfig, Settings
from agency_count.core.errors import CheckpointError
from agency_count.network.model import CountingModel, build_model

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


@dataclass
class Checkpoint:
    """Everything needed to resume or evaluate a run."""

    epoch: int
    settings: Dict[str, Any]
    model_state: Dict[str, torch.Tensor]
    optimizer_state: Optional[Dict[str, Any]]
    bank_state: Dict[str, Any]
    partition: Dict[str, Any]
    run: str = "semi"
    extra: Dict[str, Any] = field(default_factory=dict)

    @property
    def model_config(self) -> ModelConfig:
        return ModelConfig(**self.settings["model"])

    def build_model(self) -> CountingModel:
        model = build_model(self.model_config)
        model.load_state_dict(self.model_state)
        return model

    def build_bank(self) -> AgentBank:
        return AgentBank.from_state_dict(self.bank_state)

    def build_partition(self) -> IntervalPartition:
        return IntervalPartition.from_dict(self.partition)


def capture(
    *,
    epoch: int,
    settings: Settings,
    model: CountingModel,
    optimizer: Optional[torch.optim.Optimizer],
    bank: AgentBank,
    partition: IntervalPartition,
    run: str,
) -> Checkpoint:
    return Checkpoint(
        epoch=epoch,
        settings=settings.model_dump(),
        model_state={k: v.detach().clone() for k, v in model.state_dict().items()},
        optimizer_state=optimizer.state_dict() if optimizer is not None else None,
        bank_state=bank.state_dict(),
        partition=partition.to_dict(),
        run=run,
    )


def save_checkpoint(checkpoint: Checkpoint, path: str | Path) -> Path:
    """Write to a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format_version": CHECKPOINT_VERSION,
        "epoch": checkpoint.epoch,
        "run": checkpoint.run,
        "settings": checkpoint.settings,
        "model_config": checkpoint.settings["model"],
        "model_state": checkpoint.model_state,
        "optimizer_state": checkpoint.optimizer_state,
        "bank_state": checkpoint.bank_state,
        "partition": checkpoint.partition,
        "extra": checkpoint.extra,
    }
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    os.close(fd)
    try:
        torch.save(payload, tmp)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    logger.debug("Checkpoint for epoch %d written to %s", checkpoint.epoch, path)
    return path


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"Checkpoint not found: {path}", details={"path": str(path)})
    try:
        payload = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as exc:
        raise CheckpointError(f"Unreadable checkpoint {path}: {exc}") from exc

    version = payload.get("format_version") if isinstance(payload, dict) else None
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"Unsupported checkpoint version {version!r} in {path}",
            details={"expected": CHECKPOINT_VERSION, "found": version},
        )
    return Checkpoint(
        epoch=payload["epoch"],
        settings=payload["settings"],
        model_state=payload["model_state"],
        optimizer_state=payload["optimizer_state"],
        bank_state=payload["bank_state"],
        partition=payload["partition"],
        run=payload.get("run", "semi"),
        extra=payload.get("extra", {}),
    )

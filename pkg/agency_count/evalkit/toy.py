# agency_count/evalkit/toy.py
"""
Loss-geometry lab: free feature points and agents, no network.

Schemes choose which losses move the features and which move the agents:

    a_init                nothing moves
    b_pull_only           features: L_E + L_B    agents: L_E + L_B
    c_contrastive_agents  features: L_c + L_B    agents: L_c + L_B
    d_full                features: L_c + L_B    agents: L_E + L_B
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        __str__ = str.__str__
        __format__ = str.__format__
from pathlib import Path
from typing import Dict, List

import matplotlib
import torch

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from agency_count.agency.bank import AgentBank  # noqa: E402
from agency_count.agency.losses import (
    RegionFeatures,
    agent_gradients,
    background_gradient,
    background_loss,
    foreground_loss,
)
from agency_count.agency.partition import IntervalPartition, allocate_many
from agency_count.agency.similarity import cosine_matrix
from agency_count.contrastive.gradients import batch_contrastive_agent_gradient
from agency_count.contrastive.loss import batch_contrastive_loss
from agency_count.core.config import Distribution, MatchConfig
from agency_count.core.errors import ContractViolationError

logger = logging.getLogger(__name__)


class ToyScheme(StrEnum):
    A_INIT = "a_init"
    B_PULL_ONLY = "b_pull_only"
    C_CONTRASTIVE_AGENTS = "c_contrastive_agents"
    D_FULL = "d_full"


@dataclass(frozen=True)
class ToyConfig:
    num_classes: int = 4
    pts_per_class: int = 20
    num_background: int = 40
    dims: int = 2
    steps: int = 300
    scheme: ToyScheme = ToyScheme.D_FULL
    seed: int = 0
    lr: float = 0.05
    tau: float = 0.1
    distribution: Distribution = "laplace"
    snapshot_every: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "scheme", ToyScheme(self.scheme))
        if self.dims < 2:
            raise ContractViolationError(f"dims must be >= 2, got {self.dims}")
        if self.num_classes < 2 or self.pts_per_class < 2:
            raise ContractViolationError("need at least 2 classes of at least 2 points")
        if self.num_background < 1:
            raise ContractViolationError("need at least one background point")
        if self.steps < 0:
            raise ContractViolationError(f"steps must be >= 0, got {self.steps}")


@dataclass
class ToyFrame:
    step: int
    foreground: List[List[float]]
    background: List[List[float]]
    agents: List[List[float]]

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "foreground": self.foreground,
            "background": self.background,
            "agents": self.agents,
        }


@dataclass
class ToyResult:
    config: ToyConfig
    labels: List[int]
    frames: List[ToyFrame]
    initial_metrics: Dict[str, float]
    metrics: Dict[str, float] = field(default_factory=dict)


# -------------------------------------------------
# Metrics
# -------------------------------------------------
def intra_spread(foreground: torch.Tensor, labels: torch.Tensor) -> float:
    """Mean within-class pairwise cosine distance, averaged over classes."""
    spreads = []
    for label in labels.unique():
        members = foreground[labels == label]
        sims = cosine_matrix(members, members)
        upper = torch.triu_indices(len(members), len(members), offset=1)
        spreads.append((1.0 - sims[upper[0], upper[1]]).mean())
    return float(torch.stack(spreads).mean())


def class_centroids(foreground: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    unit = foreground / torch.linalg.vector_norm(foreground, dim=1, keepdim=True)
    return torch.stack([unit[labels == label].mean(0) for label in labels.unique()])


def inter_margin(foreground: torch.Tensor, labels: torch.Tensor) -> float:
    """Smallest cosine distance between two class centroids."""
    centroids = class_centroids(foreground, labels)
    sims = cosine_matrix(centroids, centroids)
    upper = torch.triu_indices(len(centroids), len(centroids), offset=1)
    return float((1.0 - sims[upper[0], upper[1]]).min())


def fg_bg_margin(foreground: torch.Tensor, background: torch.Tensor) -> float:
    """Smallest ``1 - s`` over foreground/background pairs."""
    return float(1.0 - cosine_matrix(foreground, background).max())


def toy_metrics(
    foreground: torch.Tensor, labels: torch.Tensor, background: torch.Tensor
) -> Dict[str, float]:
    return {
        "intra_spread": intra_spread(foreground, labels),
        "inter_margin": inter_margin(foreground, labels),
        "fg_bg_margin": fg_bg_margin(foreground, background),
    }


# -------------------------------------------------
# Setup
# -------------------------------------------------
def _initial_points(cfg: ToyConfig, generator: torch.Generator):
    k, n = cfg.num_classes, cfg.pts_per_class
    offset = float(torch.rand((), generator=generator, dtype=torch.float64)) * 2 * math.pi
    angles = offset + 2 * math.pi * torch.arange(k, dtype=torch.float64) / k
    centers = torch.zeros(k, cfg.dims, dtype=torch.float64)
    centers[:, 0] = torch.cos(angles)
    centers[:, 1] = torch.sin(angles)

    labels = torch.arange(k).repeat_interleave(n)
    noise = 0.35 * torch.randn(k * n, cfg.dims, generator=generator, dtype=torch.float64)
    foreground = 2.0 * centers[labels] + noise
    background = torch.randn(cfg.num_background, cfg.dims, generator=generator, dtype=torch.float64)

    # class k sits strictly inside the k-th unit-width density interval
    jitter = 0.1 + 0.8 * torch.rand(k * n, generator=generator, dtype=torch.float64)
    densities = labels.to(torch.float64) + jitter
    return foreground, background, labels, densities


def _frame(step: int, fg: torch.Tensor, bg: torch.Tensor, agents: torch.Tensor) -> ToyFrame:
    return ToyFrame(
        step=step,
        foreground=fg.detach().tolist(),
        background=bg.detach().tolist(),
        agents=agents.detach().tolist(),
    )


def run_toy(cfg: ToyConfig) -> ToyResult:
    generator = torch.Generator().manual_seed(cfg.seed)
    fg_init, bg_init, labels, densities = _initial_points(cfg, generator)
    partition = IntervalPartition(
        borders=tuple(float(i) for i in range(1, cfg.num_classes)), strategy="linear"
    )
    match = MatchConfig(distribution=cfg.distribution, tau=cfg.tau)
    assignment = allocate_many(densities, partition)

    bank = AgentBank.initialize(
        cfg.num_classes, cfg.dims, cfg.lr, seed=cfg.seed, dtype=torch.float64
    )
    foreground = fg_init.clone().requires_grad_(True)
    background = bg_init.clone().requires_grad_(True)
    feature_opt = torch.optim.Adam([foreground, background], lr=cfg.lr)

    frames = [_frame(0, foreground, background, bank.agents)]
    result = ToyResult(
        config=cfg,
        labels=labels.tolist(),
        frames=frames,
        initial_metrics=toy_metrics(fg_init, labels, bg_init),
    )

    moving = cfg.scheme is not ToyScheme.A_INIT
    for step in range(1, cfg.steps + 1 if moving else 1):
        agents = bank.agents
        fg_now, bg_now = foreground.detach(), background.detach()

        if cfg.scheme is ToyScheme.C_CONTRASTIVE_AGENTS:
            agent_grad = batch_contrastive_agent_gradient(
                fg_now, densities, agents, partition, match
            ) + match.lambda_b * background_gradient(agents, bg_now)
        else:
            region = RegionFeatures(fg_now, densities, bg_now, agent_index=assignment)
            agent_grad = agent_gradients(region, partition, bank)

        if cfg.scheme is ToyScheme.B_PULL_ONLY:
            feature_loss = foreground_loss(agents, foreground, assignment)
        else:
            feature_loss = batch_contrastive_loss(
                foreground, densities, agents, partition, match
            ).sum()
        feature_loss = feature_loss + match.lambda_b * background_loss(agents, background)

        feature_opt.zero_grad(set_to_none=True)
        feature_loss.backward()
        feature_opt.step()
        bank.step(agent_grad)

        if (cfg.snapshot_every and step % cfg.snapshot_every == 0) or step == cfg.steps:
            frames.append(_frame(step, foreground, background, bank.agents))

    result.metrics = toy_metrics(foreground.detach(), labels, background.detach())
    logger.info(
        "toy %s (seed %d, %d steps): %s", cfg.scheme.value, cfg.seed, cfg.steps, result.metrics
    )
    return result


def write_toy_outputs(result: ToyResult, out_dir: str | Path, *, plot: bool = True) -> Path:
    """``toy_metrics.json`` plus one JSON snapshot per frame under ``toy_frames/``."""
    out = Path(out_dir)
    frames_dir = out / "toy_frames"
    frames_dir.mkdir(parents=True, exist_ok=True)

    cfg = result.config
    summary = {
        "scheme": cfg.scheme.value,
        "seed": cfg.seed,
        "steps": cfg.steps,
        "initial": result.initial_metrics,
        "final": result.metrics,
    }
    (out / "toy_metrics.json").write_text(json.dumps(summary, indent=2), encoding="utf-8")

    for frame in result.frames:
        payload = {**frame.to_dict(), "labels": result.labels}
        (frames_dir / f"step_{frame.step:05d}.json").write_text(
            json.dumps(payload), encoding="utf-8"
        )

    if plot and cfg.dims == 2:
        plot_frame(result, out / f"toy_{cfg.scheme.value}.png")
    return out


def plot_frame(result: ToyResult, path: Path) -> Path:
    frame = result.frames[-1]
    fg = torch.tensor(frame.foreground)
    bg = torch.tensor(frame.background)
    agents = torch.tensor(frame.agents)
    labels = torch.tensor(result.labels)

    fig, ax = plt.subplots(figsize=(5, 5))
    ax.scatter(bg[:, 0], bg[:, 1], c="lightgray", s=12, label="background")
    ax.scatter(fg[:, 0], fg[:, 1], c=labels, cmap="tab10", s=14, label="foreground")
    ax.scatter(agents[:, 0], agents[:, 1], c="black", marker="*", s=120, label="agents")
    ax.set_title(f"{result.config.scheme.value}, step {frame.step}")
    ax.set_aspect("equal")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path

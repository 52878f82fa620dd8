# agency_count/agency/bank.py
from __future__ import annotations

import json
import logging
import os
import tempfile
from pathlib import Path

import torch

from agency_count.core.errors import (
    CheckpointError,
    ContractViolationError,
    NonFiniteError,
)

logger = logging.getLogger(__name__)

BANK_FORMAT = "agent-bank"
BANK_VERSION = 1


class AgentBank:
    """
    The ``N_a`` density agents and their dedicated Adam optimizer.

    Agents never receive autograd gradients from the model loss; they are
    moved only by ``step`` with an explicitly computed gradient.
    """

    MIN_NORM = 1e-8

    def __init__(self, agents: torch.Tensor, lr: float):
        if agents.ndim != 2 or agents.shape[0] < 1 or agents.shape[1] < 1:
            raise ContractViolationError(
                f"agents must be a non-empty (N_a, c) matrix, got {tuple(agents.shape)}"
            )
        norms = torch.linalg.vector_norm(agents, dim=1)
        if bool((norms < self.MIN_NORM).any()):
            raise ContractViolationError("agents must all have norm >= 1e-8")
        self.lr = float(lr)
        self.param = torch.nn.Parameter(agents.detach().clone())
        self.optimizer = torch.optim.Adam([self.param], lr=self.lr)

    @classmethod
    def initialize(
        cls,
        num_agents: int,
        dim: int,
        lr: float,
        seed: int = 0,
        dtype: torch.dtype = torch.float32,
    ) -> "AgentBank":
        """Unit-norm agents from a seeded spherical draw."""
        generator = torch.Generator().manual_seed(seed)
        draw = torch.randn(num_agents, dim, generator=generator, dtype=torch.float64)
        draw = draw / torch.linalg.vector_norm(draw, dim=1, keepdim=True)
        return cls(draw.to(dtype), lr)

    @property
    def agents(self) -> torch.Tensor:
        return self.param.detach()

    @property
    def num_agents(self) -> int:
        return int(self.param.shape[0])

    @property
    def dim(self) -> int:
        return int(self.param.shape[1])

    def step(self, gradients: torch.Tensor) -> "AgentBank":
        """
        One Adam step against ``gradients``. Rejects non-finite input before
        touching any state; rows that would fall below ``MIN_NORM`` keep their
        previous value.
        """
        if tuple(gradients.shape) != tuple(self.param.shape):
            raise ContractViolationError(
                f"gradient shape {tuple(gradients.shape)} does not match bank "
                f"{tuple(self.param.shape)}"
            )
        if not bool(torch.isfinite(gradients).all()):
            raise NonFiniteError(
                "non-finite agent gradient", details={"term": "L_A"}
            )

        previous = self.param.detach().clone()
        self.param.grad = gradients.detach().to(self.param.dtype).clone()
        self.optimizer.step()
        self.optimizer.zero_grad(set_to_none=True)

        with torch.no_grad():
            collapsed = torch.linalg.vector_norm(self.param, dim=1) < self.MIN_NORM
            if bool(collapsed.any()):
                logger.warning(
                    "Restoring %d agent(s) that collapsed below norm %.0e",
                    int(collapsed.sum()), self.MIN_NORM,
                )
                self.param[collapsed] = previous[collapsed]
        return self

    # -------------------------------------------------
    # Persistence
    # -------------------------------------------------
    def state_dict(self) -> dict:
        return {
            "agents": self.param.detach().clone(),
            "lr": self.lr,
            "optimizer": self.optimizer.state_dict(),
        }

    @classmethod
    def from_state_dict(cls, state: dict) -> "AgentBank":
        bank = cls(state["agents"], state["lr"])
        bank.optimizer.load_state_dict(state["optimizer"])
        return bank

    def save(self, path: str | Path) -> Path:
        """JSON document: versioned header, agents, Adam moments and step."""
        path = Path(path)
        moments = self.optimizer.state.get(self.param, {})
        payload = {
            "format": BANK_FORMAT,
            "version": BANK_VERSION,
            "num_agents": self.num_agents,
            "dim": self.dim,
            "dtype": str(self.param.dtype).removeprefix("torch."),
            "lr": self.lr,
            "agents": self.param.detach().tolist(),
            "step": float(moments["step"]) if "step" in moments else 0.0,
            "exp_avg": moments["exp_avg"].tolist() if "exp_avg" in moments else None,
            "exp_avg_sq": moments["exp_avg_sq"].tolist() if "exp_avg_sq" in moments else None,
        }
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            json.dump(payload, handle)
        os.replace(tmp, path)
        return path

    @classmethod
    def load(cls, path: str | Path) -> "AgentBank":
        path = Path(path)
        if not path.is_file():
            raise CheckpointError(f"Agent bank not found: {path}")
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise CheckpointError(f"Corrupt agent bank {path}: {exc}") from exc

        if payload.get("format") != BANK_FORMAT or payload.get("version") != BANK_VERSION:
            raise CheckpointError(
                f"Unsupported agent bank header in {path}",
                details={"format": payload.get("format"), "version": payload.get("version")},
            )

        dtype = getattr(torch, payload.get("dtype", "float32"))
        bank = cls(torch.tensor(payload["agents"], dtype=dtype), payload["lr"])
        if payload.get("exp_avg") is not None:
            bank.optimizer.state[bank.param] = {
                "step": torch.tensor(float(payload["step"]), dtype=torch.float32),
                "exp_avg": torch.tensor(payload["exp_avg"], dtype=dtype),
                "exp_avg_sq": torch.tensor(payload["exp_avg_sq"], dtype=dtype),
            }
        return bank


def agent_step(bank: AgentBank, gradients: torch.Tensor) -> AgentBank:
    return bank.step(gradients)

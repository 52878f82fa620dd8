# agency_count/agency/similarity.py
from __future__ import annotations

import torch

from agency_count.core.errors import ContractViolationError

MIN_NORM = 1e-12


def _as_tensor(x) -> torch.Tensor:
    if isinstance(x, torch.Tensor):
        return x
    return torch.as_tensor(x, dtype=torch.float64)


def require_nonzero(vectors: torch.Tensor, what: str) -> torch.Tensor:
    """Row norms of ``vectors``; raises if any is below ``MIN_NORM``."""
    norms = torch.linalg.vector_norm(vectors, dim=-1)
    if norms.numel() and bool((norms.detach() < MIN_NORM).any()):
        bad = torch.nonzero(norms.detach() < MIN_NORM).flatten().tolist()
        raise ContractViolationError(
            f"cosine similarity undefined: {what} has near-zero norm",
            details={"what": what, "rows": bad},
        )
    return norms


def cosine(f1, f2) -> torch.Tensor:
    """Cosine similarity of two vectors as a 0-dim tensor."""
    f1, f2 = _as_tensor(f1), _as_tensor(f2)
    n1 = require_nonzero(f1, "f1")
    n2 = require_nonzero(f2, "f2")
    return (f1 * f2).sum(-1) / (n1 * n2)


def paired_cosine(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Row-wise similarity of two ``(n, c)`` matrices -> ``(n,)``."""
    if a.shape != b.shape:
        raise ContractViolationError(f"shape mismatch {tuple(a.shape)} vs {tuple(b.shape)}")
    if a.shape[0] == 0:
        return a.new_zeros((0,))
    return (a * b).sum(-1) / (require_nonzero(a, "a") * require_nonzero(b, "b"))


def cosine_matrix(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """All-pairs similarity of ``(n, c)`` and ``(m, c)`` -> ``(n, m)``."""
    if a.shape[0] == 0 or b.shape[0] == 0:
        return a.new_zeros((a.shape[0], b.shape[0]))
    na = require_nonzero(a, "a")
    nb = require_nonzero(b, "b")
    return (a @ b.T) / (na[:, None] * nb[None, :])

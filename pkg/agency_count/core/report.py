# agency_count/core/report.py
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional

import torch

Number = float | torch.Tensor


def _as_float(value: Number) -> float:
    if isinstance(value, torch.Tensor):
        return float(value.detach().cpu().item())
    return float(value)


@dataclass
class LossReport:
    """
    Itemized loss terms for one computation (a sample, a step, or an epoch mean).

    ``terms`` holds raw values keyed by name (``L_ND``, ``L_m``, ``L_C`` ...),
    ``weights`` the scalar each term was multiplied by when it entered a
    composite, ``weighted`` the products.
    """

    terms: Dict[str, float] = field(default_factory=dict)
    weights: Dict[str, float] = field(default_factory=dict)
    weighted: Dict[str, float] = field(default_factory=dict)

    def add(self, name: str, value: Number, weight: Optional[float] = None) -> None:
        raw = _as_float(value)
        self.terms[name] = raw
        if weight is not None:
            self.weights[name] = float(weight)
            self.weighted[name] = raw * float(weight)

    def __getitem__(self, name: str) -> float:
        return self.terms[name]

    def __contains__(self, name: str) -> bool:
        return name in self.terms

    def non_finite_terms(self) -> list[str]:
        return sorted(
            name
            for name, value in {**self.terms, **self.weighted}.items()
            if not math.isfinite(value)
        )

    def merged(self, other: "LossReport", prefix: str = "") -> "LossReport":
        out = LossReport(dict(self.terms), dict(self.weights), dict(self.weighted))
        for name, value in other.terms.items():
            out.terms[prefix + name] = value
        for name, value in other.weights.items():
            out.weights[prefix + name] = value
        for name, value in other.weighted.items():
            out.weighted[prefix + name] = value
        return out

    def to_dict(self) -> dict:
        return {
            "terms": dict(self.terms),
            "weights": dict(self.weights),
            "weighted": dict(self.weighted),
        }

    @classmethod
    def mean(cls, reports: Iterable["LossReport"]) -> "LossReport":
        """Per-term mean over reports; a term missing from a report is skipped."""
        sums: Dict[str, float] = {}
        counts: Dict[str, int] = {}
        weights: Dict[str, float] = {}
        for report in reports:
            for name, value in report.terms.items():
                sums[name] = sums.get(name, 0.0) + value
                counts[name] = counts.get(name, 0) + 1
            weights.update(report.weights)
        out = cls()
        for name, total in sums.items():
            out.add(name, total / counts[name], weights.get(name))
        return out

# agency_count/training/batching.py
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, List

import numpy as np


@dataclass(frozen=True)
class StepIndices:
    labeled: List[int]
    unlabeled: List[int]


def steps_per_epoch(
    n_labeled: int, n_unlabeled: int, batch_labeled: int, batch_unlabeled: int
) -> int:
    """The longer of the two streams sets the epoch length."""
    labeled_steps = math.ceil(n_labeled / batch_labeled) if batch_labeled and n_labeled else 0
    unlabeled_steps = (
        math.ceil(n_unlabeled / batch_unlabeled) if batch_unlabeled and n_unlabeled else 0
    )
    return max(labeled_steps, unlabeled_steps)


class _Stream:
    """Endless shuffled cycle over ``range(n)``."""

    def __init__(self, n: int, rng: np.random.Generator):
        self.n = n
        self.rng = rng
        self._order: list[int] = []

    def take(self, k: int) -> List[int]:
        out: List[int] = []
        while len(out) < k and self.n:
            if not self._order:
                self._order = self.rng.permutation(self.n).tolist()
            out.append(self._order.pop(0))
        return out


def epoch_batches(
    n_labeled: int,
    n_unlabeled: int,
    batch_labeled: int,
    batch_unlabeled: int,
    seed: int,
    epoch: int,
    *,
    include_unlabeled: bool = True,
) -> Iterator[StepIndices]:
    """
    Index batches for one epoch. Labeled and unlabeled orders come from
    independent generators, so dropping the unlabeled stream leaves the
    labeled batches (and the step count) unchanged.
    """
    labeled = _Stream(n_labeled, np.random.default_rng([seed, epoch, 0]))
    unlabeled = _Stream(n_unlabeled, np.random.default_rng([seed, epoch, 1]))
    for _ in range(steps_per_epoch(n_labeled, n_unlabeled, batch_labeled, batch_unlabeled)):
        lab = labeled.take(batch_labeled)
        unl = unlabeled.take(batch_unlabeled)
        yield StepIndices(labeled=lab, unlabeled=unl if include_unlabeled else [])


def augmentation_seed(seed: int, epoch: int, step: int = 0) -> int:
    """One seed per optimizer step, so repeated visits of a scene get fresh draws."""
    return int(np.random.SeedSequence([seed, epoch, step]).generate_state(1)[0])

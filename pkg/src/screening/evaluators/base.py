from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np


class Evaluator(ABC):
    """Source of i.i.d. noisy observations, one stream per alternative.

    Subclasses implement :meth:`sample`, which returns one independent draw
    for every entry of ``alts`` (entries may repeat). Implementations must be
    safe to call concurrently as long as each caller owns its ``rng``.
    """

    n_alternatives: int
    description: str = ""

    @abstractmethod
    def sample(self, alts, rng: np.random.Generator) -> np.ndarray:
        ...

    def sample_one(self, alt: int, rng: np.random.Generator) -> float:
        return float(self.sample(np.array([alt], dtype=np.int64), rng)[0])

    @property
    def k(self) -> int:
        return self.n_alternatives


class LocationFamily(Evaluator):
    """Evaluator whose alternatives share a base distribution up to an additive shift.

    Observation of alternative ``i`` is ``base + offsets[i]``. The base draws
    are consumed in call order, so a single pooled call of size ``n`` yields the
    same observations as ``n`` successive calls of size one. Algorithms rely on
    this to run whole greedy phases in compiled code.
    """

    offsets: np.ndarray

    @abstractmethod
    def base_draws(self, rng: np.random.Generator, size: int) -> np.ndarray:
        ...

    def sample(self, alts, rng):
        alts = np.asarray(alts, dtype=np.int64)
        return self.base_draws(rng, alts.shape[0]) + self.offsets[alts]

    @property
    def n_alternatives(self):
        return self.offsets.shape[0]


class ConstantEvaluator(LocationFamily):
    """Noise-free evaluator: every draw equals the alternative's mean."""

    def __init__(self, means):
        self.offsets = np.asarray(means, dtype=float).copy()
        self.description = f"constant({self.offsets.shape[0]})"

    def base_draws(self, rng, size):
        return np.zeros(size)

    @property
    def true_means(self):
        return self.offsets.copy()

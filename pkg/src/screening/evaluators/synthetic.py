"""Slippage (SC) and random-means (RM) synthetic configurations.

The first alternative follows a base distribution; every other alternative is
the same distribution shifted by an additive offset, so alternatives differ
only in their means. Mean vectors are returned sorted in descending order.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional, Tuple

import numpy as np

from ..exceptions import ConfigurationError
from .base import LocationFamily

DISTRIBUTIONS = ("normal", "lognormal", "pareto")
FAMILIES = ("SC", "RM")

# name -> (family, distribution, base parameters)
# normal: (mean, sd); lognormal: (mu, sigma) of the underlying normal;
# pareto: (shape, scale), support [scale, inf).
PRESETS = {
    "SC-Normal": ("SC", "normal", (0.1, 0.6)),
    "SC-LogNormal": ("SC", "lognormal", (-3.7, 1.8)),
    "SC-Pareto": ("SC", "pareto", (3.1, 0.8)),
    "RM-Normal": ("RM", "normal", (0.0, 1.0)),
    "RM-LogNormal": ("RM", "lognormal", (-2.2, 1.5)),
    "RM-Pareto": ("RM", "pareto", (2.6, 0.8)),
}


@dataclass
class SyntheticConfig:
    family: str
    distribution: str
    base_params: Tuple[float, float]
    gamma_or_delta: float = 0.1
    m: int = 10
    k: int = 64
    g: int = 15
    seed: Optional[int] = 0

    def __post_init__(self):
        self.base_params = tuple(float(p) for p in self.base_params)
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.distribution not in DISTRIBUTIONS:
            raise ConfigurationError(
                f"unsupported distribution {self.distribution!r}; expected one of {DISTRIBUTIONS}"
            )
        if len(self.base_params) != 2:
            raise ConfigurationError("base_params needs exactly two values")
        a, b = self.base_params
        if self.distribution == "normal" and b < 0:
            raise ConfigurationError("normal standard deviation must be nonnegative")
        if self.distribution == "lognormal" and b <= 0:
            raise ConfigurationError("lognormal sigma must be positive")
        if self.distribution == "pareto" and (a <= 0 or b <= 0):
            raise ConfigurationError("pareto shape and scale must be positive")
        if self.gamma_or_delta <= 0:
            raise ConfigurationError("gamma/delta must be positive")
        if not 1 <= self.m < self.k:
            raise ConfigurationError(f"need 1 <= m < k, got m={self.m}, k={self.k}")
        if self.family == "RM" and not self.m <= self.g <= self.k:
            raise ConfigurationError(f"RM needs m <= g <= k, got g={self.g}")

    @classmethod
    def preset(cls, name, **overrides):
        try:
            family, dist, params = PRESETS[name]
        except KeyError:
            raise ConfigurationError(f"unknown preset {name!r}; known: {sorted(PRESETS)}") from None
        return cls(family=family, distribution=dist, base_params=params, **overrides)

    def to_dict(self):
        d = asdict(self)
        d["base_params"] = list(self.base_params)
        return d


def base_mean(distribution, params):
    a, b = params
    if distribution == "normal":
        return a
    if distribution == "lognormal":
        return math.exp(a + b * b / 2.0)
    if distribution == "pareto":
        return a * b / (a - 1.0) if a > 1.0 else math.inf
    raise ConfigurationError(f"unsupported distribution {distribution!r}")


def base_variance(distribution, params):
    a, b = params
    if distribution == "normal":
        return b * b
    if distribution == "lognormal":
        return (math.exp(b * b) - 1.0) * math.exp(2 * a + b * b)
    if distribution == "pareto":
        if a <= 2.0:
            return math.inf
        return b * b * a / ((a - 1.0) ** 2 * (a - 2.0))
    raise ConfigurationError(f"unsupported distribution {distribution!r}")


class SyntheticEvaluator(LocationFamily):
    """Shifted copies of one base distribution."""

    def __init__(self, distribution, base_params, offsets, description=""):
        self.distribution = distribution
        self.base_params = tuple(float(p) for p in base_params)
        self.offsets = np.asarray(offsets, dtype=float)
        self.description = description or f"{distribution}{self.base_params}"

    def base_draws(self, rng, size):
        a, b = self.base_params
        if self.distribution == "normal":
            return a + b * rng.standard_normal(size)
        if self.distribution == "lognormal":
            return np.exp(a + b * rng.standard_normal(size))
        # numpy's pareto is the Lomax form; shift onto [scale, inf).
        return b * (1.0 + rng.pareto(a, size))

    @property
    def base_mean(self):
        return base_mean(self.distribution, self.base_params)

    @property
    def true_means(self):
        return self.base_mean + self.offsets

    @property
    def base_variance(self):
        return base_variance(self.distribution, self.base_params)


def mean_offsets(config: SyntheticConfig, rng=None) -> np.ndarray:
    """Offsets from the base mean, sorted in descending order."""
    k, m, d = config.k, config.m, config.gamma_or_delta
    if config.family == "SC":
        offsets = np.concatenate([np.zeros(m), np.full(k - m, -d)])
        return offsets
    if rng is None:
        rng = np.random.default_rng(config.seed)
    g = config.g
    offsets = np.concatenate([
        [0.0],
        rng.uniform(d, 3 * d, m - 1),
        rng.uniform(0.0, d, g - m),
        rng.uniform(-1.0, 0.0, k - g),
    ])
    return np.sort(offsets)[::-1]


def build_synthetic(config: SyntheticConfig, rng=None):
    """Evaluator and exact mean vector for a synthetic configuration.

    Parameters
    ----------
    config : SyntheticConfig
    rng : numpy.random.Generator, optional
        Source for the RM offsets; defaults to one seeded by ``config.seed``.

    Returns
    -------
    evaluator : SyntheticEvaluator
    true_means : ndarray of shape (k,)
        Nonincreasing. Infinite when the base distribution has no mean.
    """
    offsets = mean_offsets(config, rng)
    name = f"{config.family}-{config.distribution}"
    ev = SyntheticEvaluator(config.distribution, config.base_params, offsets, description=name)
    return ev, ev.true_means

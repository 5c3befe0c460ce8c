"""Counter-based draws: the n-th observation of alternative i is a pure
function of ``(key, i, n)``.

Results therefore do not depend on which worker produced a draw or in what
order draws were requested, which makes parallel and sequential runs
comparable observation by observation. The mixing function is splitmix64,
chosen because it compiles under numba; numpy's Philox has no per-counter
entry point cheap enough for one call per observation.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ..exceptions import ConfigurationError
from .base import ConstantEvaluator, Evaluator
from .synthetic import SyntheticEvaluator

NORMAL, LOGNORMAL, PARETO, CONSTANT = 0, 1, 2, 3
_CODES = {"normal": NORMAL, "lognormal": LOGNORMAL, "pareto": PARETO}


@njit(cache=True)
def _mix(x):
    z = x + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def keyed_uniform(key, alt, n, lane):
    """Uniform on [0, 1) determined by ``(key, alt, n, lane)``."""
    h = _mix(np.uint64(key) ^ _mix(np.uint64(alt) ^ _mix(np.uint64(n) * np.uint64(4) + np.uint64(lane))))
    return (h >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def keyed_base(code, p1, p2, key, alt, n):
    """Base-distribution draw number ``n`` of alternative ``alt``."""
    if code == 3:
        return 0.0
    u1 = 1.0 - keyed_uniform(key, alt, n, 0)
    if code == 2:
        return p2 * u1 ** (-1.0 / p1)
    u2 = keyed_uniform(key, alt, n, 1)
    z = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
    if code == 0:
        return p1 + p2 * z
    return np.exp(p1 + p2 * z)


@njit(cache=True)
def keyed_values(code, p1, p2, key, offsets, alts, draws):
    out = np.empty(alts.shape[0])
    for j in range(alts.shape[0]):
        a = alts[j]
        out[j] = keyed_base(code, p1, p2, key, a, draws[j]) + offsets[a]
    return out


@njit(cache=True)
def _sample_cursor(code, p1, p2, key, offsets, alts, cursor):
    out = np.empty(alts.shape[0])
    for j in range(alts.shape[0]):
        a = alts[j]
        out[j] = keyed_base(code, p1, p2, key, a, cursor[a]) + offsets[a]
        cursor[a] += 1
    return out


def family_code(evaluator):
    """``(code, p1, p2, offsets)`` for evaluators that support keyed draws."""
    if isinstance(evaluator, ConstantEvaluator):
        return CONSTANT, 0.0, 0.0, evaluator.offsets
    if isinstance(evaluator, SyntheticEvaluator):
        a, b = evaluator.base_params
        return _CODES[evaluator.distribution], float(a), float(b), evaluator.offsets
    raise ConfigurationError(
        f"keyed draws need a synthetic or constant evaluator, got {type(evaluator).__name__}"
    )


class KeyedEvaluator(Evaluator):
    """Wraps a synthetic evaluator so each draw is addressed by ``(alt, n)``.

    ``sample`` ignores its ``rng`` and returns, for every requested
    alternative, its next draw index. ``value(alt, n)`` is stateless.
    """

    def __init__(self, evaluator, key: int):
        self.base = evaluator
        self.code, self.p1, self.p2, self.offsets = family_code(evaluator)
        self.key = np.uint64(int(key) & 0xFFFFFFFFFFFFFFFF)
        self.cursor = np.zeros(self.offsets.shape[0], dtype=np.int64)
        self.description = f"keyed({evaluator.description})"

    @property
    def n_alternatives(self):
        return self.offsets.shape[0]

    @property
    def true_means(self):
        return self.base.true_means

    def sample(self, alts, rng=None):
        alts = np.ascontiguousarray(alts, dtype=np.int64)
        return _sample_cursor(self.code, self.p1, self.p2, self.key, self.offsets, alts, self.cursor)

    def values(self, alts, draws):
        return keyed_values(
            self.code, self.p1, self.p2, self.key, self.offsets,
            np.ascontiguousarray(alts, dtype=np.int64), np.ascontiguousarray(draws, dtype=np.int64),
        )

    def value(self, alt: int, n: int) -> float:
        return float(self.values(np.array([alt]), np.array([n]))[0])

    def reset(self):
        self.cursor[:] = 0
        return self

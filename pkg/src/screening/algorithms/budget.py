"""Closed-form budget parameters for a target probability of good screening."""

import math

from ..exceptions import ConfigurationError


def _ceil(x: float) -> int:
    # Snap values within rounding noise of an integer before taking the ceiling.
    r = round(x)
    if abs(x - r) <= 1e-9 * max(1.0, abs(x)):
        return int(r)
    return int(math.ceil(x))


def consistent_budget(alpha: float, sigma_bar: float, delta: float, m: int):
    """Exploration and greedy sizes per alternative that reach PGS >= 1 - alpha.

    ``n0 = ceil(8 s^2 / d^2 * ln(2 m / alpha))`` and
    ``ng = ceil(alpha / 2 + 4 alpha s^2 / d^2)`` where ``s`` bounds the
    standard deviations and ``d`` is the indifference zone.

    Returns
    -------
    (n0, ng) : tuple of int
        Total budget is ``(n0 + ng) * k``.
    """
    if not 0 < alpha < 1:
        raise ConfigurationError("alpha must lie in (0, 1)")
    if sigma_bar <= 0 or delta <= 0 or m < 1:
        raise ConfigurationError("sigma_bar, delta and m must be positive")
    ratio = sigma_bar * sigma_bar / (delta * delta)
    n0 = _ceil(8.0 * ratio * math.log(2.0 * m / alpha))
    ng = _ceil(alpha / 2.0 + 4.0 * alpha * ratio)
    return n0, ng

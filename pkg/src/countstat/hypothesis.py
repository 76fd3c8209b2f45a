"""Fisher p-values, Z-values and Neyman fixed-size tests."""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq

from .distributions import Distribution, Gaussian
from .special import ConvergenceError, erf_inv


@dataclass(frozen=True)
class TestSetup:
    null_dist: Distribution
    alt_dist: Distribution | None = None
    alpha: float = 0.05

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")


@dataclass(frozen=True)
class TestDecision:
    threshold: float
    reject: bool
    beta: float | None = None
    power: float | None = None

    __test__ = False


def p_value(setup_or_dist, x0) -> float:
    """Tail probability of the observed statistic under the null.

    Discrete nulls include ``x0`` itself (``P(x >= x0)``).
    """
    dist = setup_or_dist.null_dist if isinstance(setup_or_dist, TestSetup) else setup_or_dist
    return dist.tail(x0)


def z_value(p) -> float:
    """Gaussian-equivalent significance ``Z = sqrt(2) erfinv(1 - 2p)``."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p-value must lie in (0, 1), got {p}")
    return math.sqrt(2.0) * erf_inv(1.0 - 2.0 * p)


def _upper_threshold(dist: Distribution, alpha):
    """Smallest ``x_a`` with ``P(x > x_a) <= alpha``."""
    if dist.discrete:
        lo, hi = -1, max(1, int(math.ceil(dist.mean)))
        # tail(t + 1) is P(x > t) for integer t
        while dist.tail(hi + 1) > alpha:
            lo, hi = hi, 2 * hi
            if hi > 1 << 40:
                raise ConvergenceError("no finite threshold reaches the requested size")
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if dist.tail(mid + 1) <= alpha:
                hi = mid
            else:
                lo = mid
        return float(hi)
    if isinstance(dist, Gaussian):
        return dist.mu + dist.sigma * math.sqrt(2.0) * erf_inv(1.0 - 2.0 * alpha)
    width = math.sqrt(dist.variance)
    lo = hi = dist.mean
    while dist.tail(lo) < alpha:
        lo -= width
    while dist.tail(hi) > alpha:
        hi += width
        width *= 2.0
    if lo == hi:
        return lo
    x = brentq(lambda t: dist.tail(t) - alpha, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=500)
    if abs(dist.tail(x) - alpha) > 1e-9:
        raise ConvergenceError(f"size equation not solved to 1e-9 (alpha={alpha})")
    return x


def neyman_test(setup: TestSetup, x0) -> TestDecision:
    """Fixed-size test: reject the null iff ``x0 > x_alpha``.

    ``beta = P(x <= x_alpha | H1)`` and ``power = 1 - beta`` are filled in
    when an alternative is given. For discrete nulls the actual size is at
    most ``alpha``.
    """
    x_alpha = _upper_threshold(setup.null_dist, setup.alpha)
    reject = x0 > x_alpha
    if setup.alt_dist is None:
        return TestDecision(x_alpha, reject)
    alt = setup.alt_dist
    above = alt.tail(x_alpha + 1) if alt.discrete else alt.tail(x_alpha)
    return TestDecision(x_alpha, reject, beta=1.0 - above, power=above)

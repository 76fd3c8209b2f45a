"""Neyman confidence belts for a Poisson count with mean ``s`` and no background.

For each ``s`` on a grid an *accepted set* of counts ``D`` with total
probability at least ``cl`` is chosen by an ordering rule; reading the band
sideways gives the interval ``[l(D), u(D)]`` for an observed count.

Rules:

* ``central``: equal probability ``(1 - cl)/2`` (at most) in each tail.
* ``feldman-cousins``: counts ranked by ``P(D | s) / P(D | D)``.
* ``mode-centered``: counts ranked by ``P(D | s)``.
* ``root-n``: the direct formula ``D -/+ sqrt(D)``; no belt involved.

Ranked rules add counts in descending score until the running probability
reaches ``cl``. Equal scores admit the smaller count first. The accepted
region is the span ``[min, max]`` of the selected counts, even when the
selection itself has holes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .distributions import Poisson, log_poisson
from .special import ConvergenceError, reg_gamma_lower, reg_gamma_upper

DEFAULT_CL = 0.6827
DEFAULT_S_MAX = 30.0
DEFAULT_STEP = 0.005
# probability allowed above d_max at the largest s of a belt
MASS_CUTOFF = 1e-12
# score differences below this (in log space) count as ties
_TIE_DECIMALS = 12


class OrderingRule(enum.Enum):
    CENTRAL = "central"
    FELDMAN_COUSINS = "feldman-cousins"
    MODE_CENTERED = "mode-centered"
    ROOT_N = "root-n"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {"fc": "feldman-cousins", "mode": "mode-centered", "rootn": "root-n", "neyman": "central"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown ordering rule {value!r}") from None

    @property
    def uses_belt(self):
        return self is not OrderingRule.ROOT_N


@dataclass(frozen=True)
class Interval:
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise ValueError(f"interval lower {self.lower} exceeds upper {self.upper}")

    @property
    def width(self):
        return self.upper - self.lower

    def __contains__(self, s):
        return self.lower <= s <= self.upper


def default_d_max(s_max, cutoff=MASS_CUTOFF):
    """Smallest count cap leaving less than ``cutoff`` Poisson mass above it at ``s_max``."""
    return Poisson(s_max).support(cutoff).stop - 1


def _check_cl(cl):
    if not 0.0 < cl < 1.0:
        raise ValueError(f"confidence level must lie in (0, 1), got {cl}")


def _count_probs(s, d_max):
    d = np.arange(d_max + 1)
    tail = Poisson(s).tail(d_max + 1)
    if tail >= MASS_CUTOFF:
        raise ValueError(
            f"d_max={d_max} too small for s={s}: {tail:.3g} of the probability lies above it"
        )
    return d, np.exp(log_poisson(d, s))


def accepted_set(s, rule, cl=DEFAULT_CL, d_max=None) -> np.ndarray:
    """Counts accepted at signal ``s`` under ``rule``, sorted ascending."""
    rule = OrderingRule.parse(rule)
    if not rule.uses_belt:
        raise ValueError("the root-n rule is a direct formula and has no accepted sets")
    _check_cl(cl)
    if s < 0:
        raise ValueError(f"signal must be >= 0, got {s}")
    if d_max is None:
        d_max = default_d_max(max(s, 1.0))
    d, probs = _count_probs(s, d_max)

    if rule is OrderingRule.CENTRAL:
        alpha = (1.0 - cl) / 2.0
        below = np.cumsum(probs)  # P(x <= D)
        above = np.cumsum(probs[::-1])[::-1]  # P(x >= D)
        keep = (below > alpha) & (above > alpha)
        return d[keep]

    if rule is OrderingRule.MODE_CENTERED:
        score = log_poisson(d, s)
    else:
        # P(D | s) / P(D | s_hat) with s_hat = D
        score = log_poisson(d, s) - log_poisson(d, d)
    score = np.round(np.where(np.isfinite(score), score, -np.inf), _TIE_DECIMALS)
    order = np.lexsort((d, -score))
    running = np.cumsum(probs[order])
    n_take = int(np.searchsorted(running, cl, side="left")) + 1
    if n_take > len(order):
        raise ValueError(f"accepted set at s={s} cannot reach cl={cl} below d_max={d_max}")
    return np.sort(d[order[:n_take]])


@dataclass(frozen=True)
class Belt:
    """A finished Neyman band: per-grid-point accepted count ranges."""

    s_grid: np.ndarray
    confidence_level: float
    rule: OrderingRule
    d_lo: np.ndarray
    d_hi: np.ndarray
    d_max: int

    @property
    def step(self):
        return float(self.s_grid[1] - self.s_grid[0]) if len(self.s_grid) > 1 else 0.0

    def accepts(self, i, D):
        return self.d_lo[i] <= D <= self.d_hi[i]

    def intervals(self, counts):
        """Inverted ``(lower, upper)`` arrays for several counts; NaN when never accepted."""
        counts = np.atleast_1d(np.asarray(counts))
        hit = (self.d_lo[:, None] <= counts[None, :]) & (counts[None, :] <= self.d_hi[:, None])
        any_hit = hit.any(axis=0)
        first = np.argmax(hit, axis=0)
        last = len(self.s_grid) - 1 - np.argmax(hit[::-1], axis=0)
        lower = np.where(any_hit, self.s_grid[first], np.nan)
        upper = np.where(any_hit, self.s_grid[last], np.nan)
        return lower, upper


def s_grid(s_min, s_max, n_steps):
    if not 0 <= s_min < s_max:
        raise ValueError(f"need 0 <= s_min < s_max, got {s_min}, {s_max}")
    if n_steps < 2:
        raise ValueError(f"n_steps must be >= 2, got {n_steps}")
    # rounding keeps round-number grid points (0.1, 3.8, ...) exact
    return np.round(np.linspace(s_min, s_max, n_steps), 12)


def construct_belt(s_min, s_max, n_steps, rule, cl=DEFAULT_CL, d_max=None) -> Belt:
    rule = OrderingRule.parse(rule)
    grid = s_grid(s_min, s_max, n_steps)
    if d_max is None:
        d_max = default_d_max(max(s_max, 1.0))
    d_lo = np.empty(len(grid), dtype=int)
    d_hi = np.empty(len(grid), dtype=int)
    for i, s in enumerate(grid):
        acc = accepted_set(s, rule, cl, d_max)
        d_lo[i], d_hi[i] = acc[0], acc[-1]
    return Belt(grid, cl, rule, d_lo, d_hi, d_max)


def belt_with_step(rule, cl=DEFAULT_CL, s_max=DEFAULT_S_MAX, step=DEFAULT_STEP, d_max=None) -> Belt:
    """Belt on ``0, step, 2 step, ...`` up to the first grid point at or above ``s_max``."""
    if not step > 0:
        raise ValueError(f"step must be > 0, got {step}")
    n_intervals = math.ceil(s_max / step - 1e-9)
    return construct_belt(0.0, n_intervals * step, n_intervals + 1, rule, cl, d_max)


@lru_cache(maxsize=16)
def _cached_belt(rule, cl, s_max, step):
    return belt_with_step(rule, cl, s_max, step)


def interval_for_observation(belt: Belt, D: int) -> Interval:
    if D < 0 or D > belt.d_max:
        raise ValueError(f"count {D} outside 0..{belt.d_max}")
    lower, upper = belt.intervals([D])
    if np.isnan(lower[0]):
        raise ValueError(f"count {D} is never accepted on the grid up to s={belt.s_grid[-1]}")
    return Interval(float(lower[0]), float(upper[0]))


def root_n_interval(D: int) -> Interval:
    root = math.sqrt(D)
    return Interval(D - root, D + root)


def central_interval_exact(D: int, cl=DEFAULT_CL, tol=1e-9) -> Interval:
    """Central interval from the tail equations.

    ``u`` solves ``P(x <= D | u) = (1 - cl)/2`` and ``l`` solves
    ``P(x >= D | l) = (1 - cl)/2``; ``l = 0`` when ``D = 0``.
    """
    _check_cl(cl)
    if D < 0:
        raise ValueError(f"count must be >= 0, got {D}")
    alpha = (1.0 - cl) / 2.0
    hi_bracket = D + 20.0 * math.sqrt(D + 1.0) + 20.0

    def solve(f, a, b):
        root = brentq(f, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
        if abs(f(root)) > tol:
            raise ConvergenceError(f"tail equation not solved to {tol} for D={D}")
        return root

    upper = solve(lambda u: reg_gamma_upper(D + 1, u) - alpha, 0.0, hi_bracket)
    lower = 0.0 if D == 0 else solve(lambda l: reg_gamma_lower(D, l) - alpha, 0.0, hi_bracket)
    return Interval(lower, upper)


def interval_table(rule, counts, cl=DEFAULT_CL, belt: Belt | None = None):
    """``(lower, upper)`` arrays for ``counts`` under ``rule``.

    Central intervals are exact, root-n intervals use the formula, ranked
    rules are read off ``belt`` (a default-grid belt is built when omitted).
    """
    rule = OrderingRule.parse(rule)
    counts = np.atleast_1d(np.asarray(counts, dtype=int))
    if rule is OrderingRule.ROOT_N:
        root = np.sqrt(counts)
        return counts - root, counts + root
    if rule is OrderingRule.CENTRAL and belt is None:
        pairs = [central_interval_exact(int(d), cl) for d in counts]
        return np.array([p.lower for p in pairs]), np.array([p.upper for p in pairs])
    if belt is None:
        belt = _cached_belt(rule, cl, DEFAULT_S_MAX, DEFAULT_STEP)
    return belt.intervals(counts)


def coverage(rule, cl, s, d_max=None, belt: Belt | None = None) -> float:
    """Probability that the rule's interval for a Poisson(s) count contains ``s``.

    Counts whose interval is not on the belt grid count as misses.
    """
    if s < 0:
        raise ValueError(f"signal must be >= 0, got {s}")
    rule = OrderingRule.parse(rule)
    if d_max is None:
        d_max = default_d_max(max(s, 1.0))
    counts, probs = _count_probs(s, d_max)
    lower, upper = interval_table(rule, counts, cl, belt)
    inside = (lower <= s) & (s <= upper)  # NaN compares False
    return float(math.fsum(probs[inside]))


@dataclass(frozen=True)
class CoverageScan:
    s: np.ndarray
    coverage: np.ndarray
    grid_step: float | None  # None for rules evaluated without a grid


def coverage_scan(rule, cl=DEFAULT_CL, s_values=None, s_max=20.0, step=0.05, belt_step=DEFAULT_STEP) -> CoverageScan:
    """Coverage at many signal values, reusing one belt for ranked rules."""
    rule = OrderingRule.parse(rule)
    if s_values is None:
        s_values = np.round(np.arange(0.0, s_max + step / 2, step), 12)
    s_values = np.asarray(s_values, dtype=float)
    belt = None
    grid_step = None
    if rule in (OrderingRule.FELDMAN_COUSINS, OrderingRule.MODE_CENTERED):
        belt_top = max(DEFAULT_S_MAX, float(s_values.max()) + 10.0 * math.sqrt(s_values.max() + 1.0))
        belt = belt_with_step(rule, cl, belt_top, belt_step)
        grid_step = belt.step
    elif rule is OrderingRule.CENTRAL:
        d_cap = default_d_max(max(float(s_values.max()), 1.0))
        table = interval_table(rule, np.arange(d_cap + 1), cl)
        values = np.array([_coverage_from_table(table, s, d_cap) for s in s_values])
        return CoverageScan(s_values, values, None)
    values = np.array([coverage(rule, cl, s, belt=belt) for s in s_values])
    return CoverageScan(s_values, values, grid_step)


def _coverage_from_table(table, s, d_cap):
    counts, probs = _count_probs(s, d_cap)
    lower, upper = table[0][: len(counts)], table[1][: len(counts)]
    inside = (lower <= s) & (s <= upper)
    return float(math.fsum(probs[inside]))

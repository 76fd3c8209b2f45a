"""Profile likelihood for a counting experiment with a sideband-constrained background.

The model is ``Poisson(N | s + b) * Poisson(Q | k b)`` where the sideband
count ``Q`` and scale factor ``k`` are inferred from a background estimate
``B +/- dB`` via ``Q = (B/dB)^2`` and ``k = B/dB^2``. ``Q`` is generally not
an integer; its Poisson factor is continued with the gamma function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .distributions import log_poisson
from .neyman import Interval
from .special import ConvergenceError, reg_gamma_upper

DEFAULT_S_MAX = 100.0


@dataclass(frozen=True)
class CountingModel:
    """Observed count ``N`` with background estimate ``B +/- dB``.

    ``Q`` and ``k`` default to ``(B/dB)^2`` and ``B/dB^2``. Passing ``Q``
    explicitly pins the sideband count (e.g. to a rounded value)
    while leaving ``k`` at its formula value unless that is given too.
    """

    N: int
    B: float
    dB: float
    Q: float | None = None
    k: float | None = None

    def __post_init__(self):
        if not (float(self.N).is_integer() and self.N >= 0):
            raise ValueError(f"N must be a non-negative integer, got {self.N}")
        if not (self.B > 0 and self.dB > 0):
            raise ValueError(f"B and dB must be > 0, got B={self.B}, dB={self.dB}")
        object.__setattr__(self, "N", int(self.N))
        if self.Q is None:
            object.__setattr__(self, "Q", (self.B / self.dB) ** 2)
        if self.k is None:
            object.__setattr__(self, "k", self.B / self.dB**2)
        if not (self.Q > 0 and self.k > 0):
            raise ValueError(f"Q and k must be > 0, got Q={self.Q}, k={self.k}")

    @classmethod
    def from_counts(cls, N, Q, k):
        """Model given the sideband count and scale factor directly."""
        return cls(N, B=Q / k, dB=math.sqrt(Q) / k, Q=Q, k=k)


def log_likelihood(m: CountingModel, s, b):
    """``ln[Poisson(N | s + b) Poisson(Q | k b)]``; ``-inf`` where the likelihood vanishes."""
    if s < 0 or b < 0:
        raise ValueError(f"s and b must be >= 0, got s={s}, b={b}")
    return log_poisson(m.N, s + b) + log_poisson(m.Q, m.k * b)


@dataclass(frozen=True)
class MLE:
    s_hat: float
    b_hat: float
    at_boundary: bool  # s_hat sits at 0 (N <= Q/k); Wilks asymptotics do not apply


def mle(m: CountingModel) -> MLE:
    b_free = m.Q / m.k
    s_free = m.N - b_free
    if s_free > 0:
        return MLE(s_free, b_free, False)
    return MLE(0.0, conditional_mle_b(m, 0.0), True)


def conditional_mle_b(m: CountingModel, s):
    """Background maximizing the likelihood at fixed signal ``s``."""
    if s < 0:
        raise ValueError(f"s must be >= 0, got {s}")
    one_k = 1.0 + m.k
    g = m.N + m.Q - one_k * s
    disc = g * g + 4.0 * one_k * m.Q * s
    if g >= 0:
        return (g + math.sqrt(disc)) / (2.0 * one_k)
    # same root, rearranged to avoid cancellation when g < 0
    return 2.0 * m.Q * s / (math.sqrt(disc) - g)


def profile_log_likelihood(m: CountingModel, s):
    return log_likelihood(m, s, conditional_mle_b(m, s))


def profile_t(m: CountingModel, s):
    """``t = -2 ln[L_prof(s) / L_prof(s_hat)]``, clipped at 0."""
    fit = mle(m)
    t = -2.0 * (profile_log_likelihood(m, s) - log_likelihood(m, fit.s_hat, fit.b_hat))
    return max(t, 0.0)


@dataclass(frozen=True)
class ProfileCurve:
    s_values: np.ndarray
    t_values: np.ndarray

    @property
    def neg_ln_lambda(self):
        return self.t_values / 2.0


def profile_curve(m: CountingModel, s_values) -> ProfileCurve:
    s_values = np.asarray(s_values, dtype=float)
    return ProfileCurve(s_values, np.array([profile_t(m, s) for s in s_values]))


def wilks_interval(m: CountingModel, n_sigma=1.0, s_max=DEFAULT_S_MAX) -> Interval:
    """Solve ``t(s) = n_sigma^2`` on each side of the MLE.

    The lower end is 0 when ``t(0)`` is already below the threshold.
    """
    if not n_sigma > 0:
        raise ValueError(f"n_sigma must be > 0, got {n_sigma}")
    level = n_sigma * n_sigma
    s_hat = mle(m).s_hat

    def excess(s):
        return profile_t(m, s) - level

    def root(a, b):
        x = brentq(excess, a, b, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=500)
        if abs(excess(x)) > 1e-8:
            raise ConvergenceError(f"t(s) = {level} not solved to 1e-8 near s={x}")
        return x

    if excess(s_max) < 0:
        raise ConvergenceError(f"upper root of t(s) = {level} lies beyond s_max={s_max}")
    upper = root(s_hat, s_max)
    lower = 0.0 if excess(0.0) <= 0 else root(0.0, s_hat)
    return Interval(lower, upper)


def wilks_pvalue(t0, dof=1):
    """Upper chi-square tail ``P(chi2_dof > t0)``."""
    if t0 < 0:
        raise ValueError(f"t0 must be >= 0, got {t0}")
    if dof < 1:
        raise ValueError(f"dof must be >= 1, got {dof}")
    return reg_gamma_upper(dof / 2.0, t0 / 2.0)


def profile_significance(m: CountingModel):
    """``sqrt(t(N, 0))``, the background-only profile significance."""
    return math.sqrt(profile_t(m, 0.0))


def profile_t_batch(N, Q, k, s):
    """Vectorized ``t`` for many pseudo-experiments sharing ``k`` and the tested ``s``.

    ``N`` and ``Q`` are arrays of pseudo-observed counts. Used for sampling
    studies where looping over :func:`profile_t` would be slow.
    """
    N = np.asarray(N, dtype=float)
    Q = np.asarray(Q, dtype=float)
    one_k = 1.0 + k

    def b_cond(s_arr):
        g = N + Q - one_k * s_arr
        disc = np.sqrt(g * g + 4.0 * one_k * Q * s_arr)
        with np.errstate(divide="ignore", invalid="ignore"):
            alt = np.where(disc - g > 0, 2.0 * Q * s_arr / (disc - g), 0.0)
        return np.where(g >= 0, (g + disc) / (2.0 * one_k), alt)

    def loglik(s_arr, b_arr):
        return _xlogy(N, s_arr + b_arr) - (s_arr + b_arr) + _xlogy(Q, k * b_arr) - k * b_arr

    s_arr = np.full_like(N, float(s))
    s_free = N - Q / k
    s_hat = np.maximum(s_free, 0.0)
    b_hat = np.where(s_free >= 0, Q / k, b_cond(np.zeros_like(N)))
    t = -2.0 * (loglik(s_arr, b_cond(s_arr)) - loglik(s_hat, b_hat))
    return np.maximum(t, 0.0)


def _xlogy(x, y):
    # x ln y with 0 ln 0 = 0; the log-factorial terms cancel inside t
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x == 0, 0.0, x * np.log(y))


def wilks_calibration(m: CountingModel, s_true, b_true, n_experiments=10_000, n_sigma=1.0, seed=0):
    """Fraction of pseudo-experiments with ``t(s_true) <= n_sigma^2``.

    Pseudo-data are ``N* ~ Poisson(s + b)`` and ``Q* ~ Poisson(k b)`` with
    ``k`` held at the model value.
    """
    rng = np.random.default_rng(seed)
    n_star = rng.poisson(s_true + b_true, size=n_experiments)
    q_star = rng.poisson(m.k * b_true, size=n_experiments)
    t = profile_t_batch(n_star, q_star, m.k, s_true)
    return float(np.mean(t <= n_sigma * n_sigma))

"""Bayesian treatment of the sideband-constrained counting model.

With a flat prior on ``b``, the sideband likelihood ``Poisson(Q | k b)``
turns into the background posterior ``Gamma(b; rate k, shape Q + 1)``,
which then serves as the background prior for the signal region.
Integrating ``Poisson(N | s + b)`` against it gives the marginal likelihood
in closed form:

    p(D | s) = (1/Q) (1 - x)^2 sum_{r=0}^{N} Beta(x; r + 1, Q) Poisson(N - r | s),
    x = 1 / (1 + k),

where ``Beta`` is the beta *density*. Every term is evaluated in log space.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .distributions import Beta, Gamma, log_poisson
from .neyman import Interval
from .profile import CountingModel
from .special import log_gamma

# default posterior grid: spacing 0.01 on [0, s_max], with s_max covering the
# posterior tail to well below 1e-9 (at least 40)
GRID_SPACING = 0.01
MIN_S_MAX = 40.0


class ImproperPriorError(ValueError):
    """An improper prior was used where only a proper one is meaningful."""


class PriorKind(enum.Enum):
    FLAT = "flat"
    DELTA = "delta"
    GAMMA = "gamma"


@dataclass(frozen=True)
class SignalPrior:
    """Prior on the signal mean.

    ``flat`` is the improper constant prior. ``delta`` puts all mass on
    ``s0``. ``gamma`` is ``Gamma(q s, 1, M + 1)`` read as a density in ``s``:
    ``q (q s)^M e^(-q s) / Gamma(M + 1)``.
    """

    kind: PriorKind
    s0: float = 0.0
    q: float = 1.0
    M: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", PriorKind(self.kind))
        if self.kind is PriorKind.DELTA and not self.s0 >= 0:
            raise ValueError(f"delta prior location must be >= 0, got {self.s0}")
        if self.kind is PriorKind.GAMMA and not (self.q > 0 and self.M >= 0):
            raise ValueError(f"gamma prior needs q > 0 and M >= 0, got q={self.q}, M={self.M}")

    @classmethod
    def flat(cls):
        return cls(PriorKind.FLAT)

    @classmethod
    def delta(cls, s0):
        return cls(PriorKind.DELTA, s0=s0)

    @classmethod
    def gamma(cls, q, M):
        return cls(PriorKind.GAMMA, q=q, M=M)

    @property
    def proper(self):
        return self.kind is not PriorKind.FLAT

    def density(self, s):
        if self.kind is PriorKind.FLAT:
            return 1.0
        if self.kind is PriorKind.GAMMA:
            return Gamma(self.q, self.M + 1.0).density(s)
        raise ValueError("a delta prior has no density")


def background_posterior(b, m: CountingModel):
    """Sideband posterior density of ``b``: ``k e^(-k b) (k b)^Q / Gamma(Q + 1)``."""
    return Gamma(m.k, m.Q + 1.0).density(b)


def _log_mixture_weights(m: CountingModel):
    # ln[(1/Q) (1 - x)^2 Beta(x; r + 1, Q)] for r = 0..N
    x = 1.0 / (1.0 + m.k)
    front = -math.log(m.Q) + 2.0 * math.log1p(-x)
    return np.array([front + Beta(r + 1.0, m.Q).log_density(x) for r in range(m.N + 1)])


def log_marginal_likelihood(m: CountingModel, s):
    """``ln p(D | s)`` with the background integrated out."""
    if np.any(np.asarray(s) < 0):
        raise ValueError("signal must be >= 0")
    log_w = _log_mixture_weights(m)
    r = np.arange(m.N + 1)
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    terms = log_w[None, :] + log_poisson((m.N - r)[None, :], s_arr[:, None])
    top = terms.max(axis=1)
    out = top + np.log(np.exp(terms - top[:, None]).sum(axis=1))
    return float(out[0]) if np.ndim(s) == 0 else out


def marginal_likelihood(m: CountingModel, s):
    return np.exp(log_marginal_likelihood(m, s))


@dataclass(frozen=True)
class PosteriorCurve:
    s_values: np.ndarray
    density: np.ndarray
    prior: SignalPrior
    normalization: float  # trapezoid integral of density over s_values

    def cdf(self):
        steps = 0.5 * (self.density[1:] + self.density[:-1]) * np.diff(self.s_values)
        return np.concatenate([[0.0], np.cumsum(steps)])

    @property
    def mode(self):
        return float(self.s_values[np.argmax(self.density)])


def _log_gamma_prior_weights(m: CountingModel, prior: SignalPrior):
    # ln of the integral over s of Poisson(n | s) * prior(s), for n = N - r:
    # q^(M+1) Gamma(n + M + 1) / (n! Gamma(M + 1) (1 + q)^(n + M + 1))
    n = m.N - np.arange(m.N + 1, dtype=float)
    q, M = prior.q, prior.M
    return (
        (M + 1.0) * math.log(q)
        + log_gamma(n + M + 1.0)
        - log_gamma(n + 1.0)
        - math.lgamma(M + 1.0)
        - (n + M + 1.0) * math.log1p(q)
    )


def default_s_grid(m: CountingModel):
    n = m.N + 1.0
    s_max = max(MIN_S_MAX, 10.0 * math.ceil((n + 12.0 * math.sqrt(n)) / 10.0))
    return np.round(np.linspace(0.0, s_max, int(round(s_max / GRID_SPACING)) + 1), 12)


def signal_posterior(m: CountingModel, prior: SignalPrior, s_grid=None) -> PosteriorCurve:
    """Posterior density of ``s`` on a grid, for a flat or gamma prior.

    Flat prior: each Poisson(N - r | s) integrates to one over ``s``, so the
    posterior is the mixture ``sum_r w_r Poisson(N - r | s) / sum_r w_r``.

    Gamma prior with rate ``q`` and shape ``M + 1``: each component becomes a
    ``Gamma(s; rate 1 + q, shape N - r + M + 1)`` density and its weight
    picks up the factor from :func:`_log_gamma_prior_weights`.
    """
    if s_grid is None:
        s_grid = default_s_grid(m)
    s = np.asarray(s_grid, dtype=float)
    if np.any(s < 0) or np.any(np.diff(s) <= 0):
        raise ValueError("s_grid must be increasing and non-negative")
    log_w = _log_mixture_weights(m)
    n = m.N - np.arange(m.N + 1, dtype=float)

    if prior.kind is PriorKind.FLAT:
        log_comp = log_poisson(n[None, :], s[:, None])
    elif prior.kind is PriorKind.GAMMA:
        log_w = log_w + _log_gamma_prior_weights(m, prior)
        shape = n + prior.M + 1.0
        rate = 1.0 + prior.q
        with np.errstate(divide="ignore", invalid="ignore"):
            log_s = np.log(s)[:, None]
            body = (shape - 1.0) * log_s + shape * math.log(rate) - rate * s[:, None] - log_gamma(shape)
        # 0 * ln(0) at s = 0 for the shape-1 component
        log_comp = np.where((s[:, None] == 0) & (shape[None, :] == 1.0), math.log(rate), body)
    else:
        raise ValueError("a delta prior gives a point mass, not a posterior curve")

    log_w = log_w - log_w.max()
    weights = np.exp(log_w) / np.exp(log_w).sum()
    density = (weights[None, :] * np.exp(log_comp)).sum(axis=1)
    norm = float(np.sum(0.5 * (density[1:] + density[:-1]) * np.diff(s)))
    return PosteriorCurve(s, density, prior, norm)


def credible_interval(curve: PosteriorCurve, cl=0.68) -> Interval:
    """Central (equal-tail) interval from the trapezoid CDF.

    The CDF is rescaled to end at 1 on the grid and inverted by linear
    interpolation.
    """
    if not 0.0 < cl < 1.0:
        raise ValueError(f"cl must lie in (0, 1), got {cl}")
    cdf = curve.cdf()
    cdf = cdf / cdf[-1]
    lo_p, hi_p = (1.0 - cl) / 2.0, (1.0 + cl) / 2.0
    return Interval(_invert_cdf(cdf, curve.s_values, lo_p), _invert_cdf(cdf, curve.s_values, hi_p))


def _invert_cdf(cdf, s, p):
    i = int(np.searchsorted(cdf, p, side="left"))
    if i == 0:
        return float(s[0])
    if i >= len(cdf):
        return float(s[-1])
    c0, c1 = cdf[i - 1], cdf[i]
    frac = 0.0 if c1 == c0 else (p - c0) / (c1 - c0)
    return float(s[i - 1] + frac * (s[i] - s[i - 1]))


def evidence(m: CountingModel, prior: SignalPrior):
    """``p(D | H) = integral of p(D | s) prior(s) ds`` for a proper prior."""
    if not prior.proper:
        raise ImproperPriorError("the evidence under an improper prior is not defined")
    if prior.kind is PriorKind.DELTA:
        return marginal_likelihood(m, prior.s0)
    log_terms = _log_mixture_weights(m) + _log_gamma_prior_weights(m, prior)
    top = log_terms.max()
    return float(math.exp(top) * np.exp(log_terms - top).sum())


@dataclass(frozen=True)
class BayesFactor:
    B10: float
    Z: float
    evidence_h1: float
    evidence_h0: float


def bayes_z(b10):
    """Signed Gaussian-like scale ``sign(ln B) sqrt(2 |ln B|)``."""
    ln_b = math.log(b10)
    return math.copysign(math.sqrt(2.0 * abs(ln_b)), ln_b)


def bayes_factor(m: CountingModel, s1) -> BayesFactor:
    """Bayes factor of signal hypothesis ``H1`` against background only (``s = 0``).

    ``s1`` is either the signal value of a delta prior or a proper
    :class:`SignalPrior`.
    """
    prior = s1 if isinstance(s1, SignalPrior) else SignalPrior.delta(s1)
    if prior.kind is PriorKind.DELTA and not prior.s0 > 0:
        raise ValueError(f"signal hypothesis must have s1 > 0, got {prior.s0}")
    h1 = evidence(m, prior)
    h0 = marginal_likelihood(m, 0.0)
    if h0 == 0.0:
        raise ZeroDivisionError("background-only marginal likelihood is zero")
    b10 = h1 / h0
    return BayesFactor(b10, bayes_z(b10), h1, h0)

"""Probability distributions for counting experiments.

Each distribution is an immutable dataclass exposing ``density`` (pmf or
pdf), ``tail``, ``mean``, ``variance`` and ``sample``. The module-level
functions :func:`mass_or_density`, :func:`tail_probability` and
:func:`sample` are thin dispatchers kept for call sites that prefer a
functional style.

Tail convention: ``tail(x0)`` is ``P(x > x0)`` for densities and
``P(x >= x0)`` for discrete distributions, so the Poisson p-value of an
observed count includes the observed count itself.

Parameter names follow the usual physics notation: ``Gamma(a, b)`` has rate
``a`` and shape ``b``, ``Uniform(a)`` lives on ``[0, a]`` and ``Beta(n, m)``
has shape parameters ``n`` and ``m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar, Sequence

import numpy as np

from .special import log_gamma, reg_beta, reg_gamma_lower, reg_gamma_upper

# mass left out when an unbounded discrete support is truncated
SUPPORT_TAIL = 1e-12


def _as_rng(rng):
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def _is_integer(x):
    return float(x).is_integer()


def log_poisson(k, mu):
    """Log Poisson probability ``ln(mu^k e^-mu / Gamma(k + 1))``.

    Works on arrays and accepts non-integer ``k`` (gamma continuation).
    ``mu = 0`` gives ``0`` at ``k = 0`` and ``-inf`` elsewhere.
    """
    k = np.asarray(k, dtype=float)
    mu = np.asarray(mu, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(k == 0, 0.0, k * np.log(np.where(mu > 0, mu, 1.0)))
        out = np.where((mu == 0) & (k > 0), -np.inf, out - mu)
    out = out - log_gamma(k + 1.0)
    return out if out.ndim else float(out)


def poisson_pmf(k, mu):
    return np.exp(log_poisson(k, mu))


class Distribution:
    discrete: ClassVar[bool] = False

    def density(self, x):
        raise NotImplementedError

    def tail(self, x0):
        raise NotImplementedError

    def rvs(self, rng, count):
        raise NotImplementedError

    def sample(self, rng, count: int) -> np.ndarray:
        """Draw ``count`` values; ``rng`` is a numpy Generator or a seed."""
        if count < 0:
            raise ValueError(f"count must be >= 0, got {count}")
        rng = _as_rng(rng)
        if count == 0:
            return np.empty(0)
        return self.rvs(rng, count)


@dataclass(frozen=True)
class Binomial(Distribution):
    n: int
    p: float
    discrete: ClassVar[bool] = True

    def __post_init__(self):
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 1):
            raise ValueError(f"Binomial n must be a positive integer, got {self.n}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"Binomial p must lie in [0, 1], got {self.p}")

    def density(self, k):
        if not (_is_integer(k) and 0 <= k <= self.n):
            raise ValueError(f"{k} is outside the support 0..{self.n}")
        k = int(k)
        n, p = self.n, self.p
        if p == 0.0 or p == 1.0:
            return float(k == (0 if p == 0.0 else n))
        try:
            coeff = float(math.comb(n, k))
        except OverflowError:
            log_coeff = math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
            return math.exp(log_coeff + k * math.log(p) + (n - k) * math.log1p(-p))
        return coeff * p**k * math.exp((n - k) * math.log1p(-p))

    def tail(self, k0):
        k = math.ceil(k0)
        if k <= 0:
            return 1.0
        if k > self.n:
            return 0.0
        # P(X >= k) = I_p(k, n - k + 1)
        return reg_beta(self.p, k, self.n - k + 1)

    def support(self):
        return range(self.n + 1)

    @property
    def mean(self):
        return self.n * self.p

    @property
    def variance(self):
        return self.n * self.p * (1.0 - self.p)

    def rvs(self, rng, count):
        return rng.binomial(self.n, self.p, size=count)


@dataclass(frozen=True)
class Poisson(Distribution):
    a: float
    discrete: ClassVar[bool] = True

    def __post_init__(self):
        if not self.a >= 0:
            raise ValueError(f"Poisson mean must be >= 0, got {self.a}")

    def density(self, k):
        # non-integer k is allowed: Gamma-function continuation of the pmf
        if not k >= 0:
            raise ValueError(f"Poisson count must be >= 0, got {k}")
        return math.exp(log_poisson(k, self.a))

    def tail(self, k0):
        k = math.ceil(k0)
        if k <= 0:
            return 1.0
        return reg_gamma_lower(k, self.a)

    def support(self, tail=SUPPORT_TAIL):
        """Counts ``0..K`` where ``K`` leaves less than ``tail`` mass above it."""
        k = max(int(self.a), 1)
        while self.tail(k + 1) >= tail:
            k += 1
        return range(k + 1)

    @property
    def mean(self):
        return self.a

    @property
    def variance(self):
        return self.a

    def rvs(self, rng, count):
        return rng.poisson(self.a, size=count)


@dataclass(frozen=True)
class Multinomial(Distribution):
    n: int
    p: tuple[float, ...]
    discrete: ClassVar[bool] = True

    def __post_init__(self):
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 1):
            raise ValueError(f"Multinomial n must be a positive integer, got {self.n}")
        object.__setattr__(self, "p", tuple(float(v) for v in self.p))
        if any(v < 0 for v in self.p):
            raise ValueError("Multinomial probabilities must be >= 0")
        if abs(math.fsum(self.p) - 1.0) > 1e-12:
            raise ValueError(f"Multinomial probabilities must sum to 1, got {math.fsum(self.p)}")

    def density(self, k: Sequence[int]):
        k = [int(v) for v in k]
        if len(k) != len(self.p) or sum(k) != self.n or min(k) < 0:
            raise ValueError(f"{k} is outside the multinomial support")
        log_val = math.lgamma(self.n + 1)
        for ki, pi in zip(k, self.p):
            if ki == 0:
                continue
            if pi == 0.0:
                return 0.0
            log_val += ki * math.log(pi) - math.lgamma(ki + 1)
        return math.exp(log_val)

    def tail(self, x0):
        raise ValueError("tail probability is undefined for the multinomial")

    def rvs(self, rng, count):
        return rng.multinomial(self.n, self.p, size=count)


@dataclass(frozen=True)
class Uniform(Distribution):
    a: float

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"Uniform width must be > 0, got {self.a}")

    def density(self, x):
        if not 0.0 <= x <= self.a:
            raise ValueError(f"{x} is outside the support [0, {self.a}]")
        return 1.0 / self.a

    def tail(self, x0):
        return min(1.0, max(0.0, 1.0 - x0 / self.a))

    @property
    def mean(self):
        return self.a / 2.0

    @property
    def variance(self):
        return self.a**2 / 12.0

    def rvs(self, rng, count):
        return rng.uniform(0.0, self.a, size=count)


@dataclass(frozen=True)
class Gaussian(Distribution):
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"Gaussian sigma must be > 0, got {self.sigma}")

    def density(self, x):
        z = (x - self.mu) / self.sigma
        return math.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2.0 * math.pi))

    def tail(self, x0):
        return 0.5 * math.erfc((x0 - self.mu) / (self.sigma * math.sqrt(2.0)))

    @property
    def mean(self):
        return self.mu

    @property
    def variance(self):
        return self.sigma**2

    def rvs(self, rng, count):
        return rng.normal(self.mu, self.sigma, size=count)


@dataclass(frozen=True)
class LogNormal(Distribution):
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"LogNormal sigma must be > 0, got {self.sigma}")

    def density(self, x):
        if not x > 0:
            raise ValueError(f"LogNormal density requires x > 0, got {x}")
        z = (math.log(x) - self.mu) / self.sigma
        return math.exp(-0.5 * z * z) / (x * self.sigma * math.sqrt(2.0 * math.pi))

    def tail(self, x0):
        if x0 <= 0:
            return 1.0
        return 0.5 * math.erfc((math.log(x0) - self.mu) / (self.sigma * math.sqrt(2.0)))

    @property
    def mean(self):
        return math.exp(self.mu + self.sigma**2 / 2.0)

    @property
    def variance(self):
        return math.expm1(self.sigma**2) * math.exp(2.0 * self.mu + self.sigma**2)

    def rvs(self, rng, count):
        return rng.lognormal(self.mu, self.sigma, size=count)


@dataclass(frozen=True)
class ChiSquare(Distribution):
    n: float

    def __post_init__(self):
        if not self.n > 0:
            raise ValueError(f"ChiSquare degrees of freedom must be > 0, got {self.n}")

    def density(self, x):
        if not x >= 0:
            raise ValueError(f"ChiSquare density requires x >= 0, got {x}")
        h = self.n / 2.0
        if x == 0:
            if h < 1.0:
                return math.inf
            return 0.5 if h == 1.0 else 0.0
        return math.exp((h - 1.0) * math.log(x) - x / 2.0 - h * math.log(2.0) - math.lgamma(h))

    def tail(self, x0):
        if x0 <= 0:
            return 1.0
        return reg_gamma_upper(self.n / 2.0, x0 / 2.0)

    @property
    def mean(self):
        return self.n

    @property
    def variance(self):
        return 2.0 * self.n

    def rvs(self, rng, count):
        return rng.chisquare(self.n, size=count)


@dataclass(frozen=True)
class Gamma(Distribution):
    """Gamma density ``x^(b-1) a^b exp(-a x) / Gamma(b)`` (rate ``a``, shape ``b``)."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError(f"Gamma needs rate a > 0 and shape b > 0, got a={self.a}, b={self.b}")

    def log_density(self, x):
        if not x >= 0:
            raise ValueError(f"Gamma density requires x >= 0, got {x}")
        if x == 0:
            if self.b == 1.0:
                return math.log(self.a)
            return -math.inf if self.b > 1.0 else math.inf
        return (self.b - 1.0) * math.log(x) + self.b * math.log(self.a) - self.a * x - math.lgamma(self.b)

    def density(self, x):
        return math.exp(self.log_density(x))

    def tail(self, x0):
        if x0 <= 0:
            return 1.0
        return reg_gamma_upper(self.b, self.a * x0)

    @property
    def mean(self):
        return self.b / self.a

    @property
    def variance(self):
        return self.b / self.a**2

    def rvs(self, rng, count):
        return rng.gamma(self.b, 1.0 / self.a, size=count)


@dataclass(frozen=True)
class Exponential(Distribution):
    a: float

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"Exponential rate must be > 0, got {self.a}")

    def density(self, x):
        if not x >= 0:
            raise ValueError(f"Exponential density requires x >= 0, got {x}")
        return self.a * math.exp(-self.a * x)

    def tail(self, x0):
        return 1.0 if x0 <= 0 else math.exp(-self.a * x0)

    @property
    def mean(self):
        return 1.0 / self.a

    @property
    def variance(self):
        return 1.0 / self.a**2

    def rvs(self, rng, count):
        return rng.exponential(1.0 / self.a, size=count)


@dataclass(frozen=True)
class Beta(Distribution):
    n: float
    m: float

    def __post_init__(self):
        if not (self.n > 0 and self.m > 0):
            raise ValueError(f"Beta shapes must be > 0, got n={self.n}, m={self.m}")

    def log_density(self, x):
        if not 0.0 <= x <= 1.0:
            raise ValueError(f"{x} is outside the support [0, 1]")
        n, m = self.n, self.m
        log_x = math.log(x) if x > 0 else -math.inf
        log_1mx = math.log1p(-x) if x < 1 else -math.inf
        val = math.lgamma(n + m) - math.lgamma(n) - math.lgamma(m)
        if n != 1.0:
            val += (n - 1.0) * log_x
        if m != 1.0:
            val += (m - 1.0) * log_1mx
        return val

    def density(self, x):
        return math.exp(self.log_density(x))

    def tail(self, x0):
        if x0 <= 0:
            return 1.0
        if x0 >= 1:
            return 0.0
        return 1.0 - reg_beta(x0, self.n, self.m)

    @property
    def mean(self):
        return self.n / (self.n + self.m)

    @property
    def variance(self):
        s = self.n + self.m
        return self.n * self.m / (s * s * (s + 1.0))

    def rvs(self, rng, count):
        return rng.beta(self.n, self.m, size=count)


def mass_or_density(d: Distribution, x):
    return d.density(x)


def tail_probability(d: Distribution, x0) -> float:
    """``P(x > x0)`` for densities, ``P(x >= x0)`` for discrete distributions."""
    return d.tail(x0)


def sample(d: Distribution, rng, count: int) -> np.ndarray:
    return d.sample(rng, count)


def binomial_mgf(t, n, p):
    """Moment generating function ``<e^(t k)> = (e^t p + 1 - p)^n``."""
    return (math.exp(t) * p + 1.0 - p) ** n


def binomial_moment(r, n, p):
    """Raw moment ``<k^r>`` of Binomial(n, p) for ``r`` in {1, 2}."""
    if r == 1:
        return n * p
    if r == 2:
        return (n * p) ** 2 + n * p - n * p * p
    raise ValueError(f"only the first two moments are provided, got r={r}")

"""Special functions used throughout the package.

Log-gamma, the regularized incomplete gamma and beta functions, erf and its
inverse, and the standard normal quantile. Everything here works on Python
floats; array callers go through :func:`log_gamma`, which also accepts numpy
arrays.

The incomplete gamma and beta functions use the classic series /
continued-fraction pair (modified Lentz evaluation), switching at
``x = a + 1`` for the gamma function and at ``x = (a + 1) / (a + b + 2)`` for
the beta function. Both prefactors are evaluated in log space so tail
probabilities down to ~1e-300 are returned without underflow.
"""

import math
from statistics import NormalDist

import numpy as np

EPS = 2.0**-52
FPMIN = 1e-300
MAX_ITER = 100_000

_STD_NORMAL = NormalDist()

erf = math.erf
erfc = math.erfc


class ConvergenceError(ArithmeticError):
    """An iterative evaluation or root search failed to converge."""


def log_gamma(x):
    """Natural log of the gamma function for ``x > 0``.

    Scalars return a float; array-likes return an ndarray of the same shape.
    """
    if np.ndim(x) == 0:
        x = float(x)
        if not x > 0:
            raise ValueError(f"log_gamma requires x > 0, got {x}")
        return math.lgamma(x)
    arr = np.asarray(x, dtype=float)
    if not np.all(arr > 0):
        raise ValueError("log_gamma requires x > 0 for every element")
    out = np.fromiter((math.lgamma(v) for v in arr.ravel()), dtype=float, count=arr.size)
    return out.reshape(arr.shape)


def _log_gamma_prefactor(a, x):
    # ln(x^a e^-x / Gamma(a))
    return a * math.log(x) - x - math.lgamma(a)


def _gamma_series(a, x):
    ap = a
    term = total = 1.0 / a
    for _ in range(MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * EPS:
            return total * math.exp(_log_gamma_prefactor(a, x))
    raise ConvergenceError(f"incomplete gamma series did not converge (a={a}, x={x})")


def _gamma_continued_fraction(a, x):
    b = x + 1.0 - a
    c = 1.0 / FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < FPMIN:
            d = FPMIN
        c = b + an / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            return math.exp(_log_gamma_prefactor(a, x)) * h
    raise ConvergenceError(f"incomplete gamma fraction did not converge (a={a}, x={x})")


def _check_gamma_args(a, x):
    if not a > 0:
        raise ValueError(f"incomplete gamma requires a > 0, got {a}")
    if not x >= 0:
        raise ValueError(f"incomplete gamma requires x >= 0, got {x}")


def reg_gamma_lower(a, x):
    """Regularized lower incomplete gamma ``P(a, x) = gamma(a, x) / Gamma(a)``.

    For integer ``a = N`` this is the Poisson tail ``P(k >= N | mu = x)``.
    """
    a, x = float(a), float(x)
    _check_gamma_args(a, x)
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < a + 1.0:
        return min(1.0, _gamma_series(a, x))
    return max(0.0, 1.0 - _gamma_continued_fraction(a, x))


def reg_gamma_upper(a, x):
    """Regularized upper incomplete gamma ``Q(a, x) = 1 - P(a, x)``.

    Computed directly (not as ``1 - P``) when ``Q`` is the small side.
    """
    a, x = float(a), float(x)
    _check_gamma_args(a, x)
    if x == 0.0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return max(0.0, 1.0 - _gamma_series(a, x))
    return min(1.0, _gamma_continued_fraction(a, x))


def _beta_continued_fraction(a, b, x):
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < FPMIN:
        d = FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, MAX_ITER):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < FPMIN:
            d = FPMIN
        c = 1.0 + aa / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < FPMIN:
            d = FPMIN
        c = 1.0 + aa / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            return h
    raise ConvergenceError(f"incomplete beta fraction did not converge (a={a}, b={b}, x={x})")


def reg_beta(x, a, b):
    """Regularized incomplete beta function ``I_x(a, b)``."""
    x, a, b = float(x), float(a), float(b)
    if not (a > 0 and b > 0):
        raise ValueError(f"reg_beta requires a, b > 0, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"reg_beta requires 0 <= x <= 1, got {x}")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return min(1.0, front * _beta_continued_fraction(a, b, x) / a)
    return max(0.0, 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b)


def normal_cdf(z):
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def normal_sf(z):
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def normal_quantile(p):
    """Inverse of the standard normal CDF, ``Phi(z) = p``."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError(f"normal_quantile requires 0 < p < 1, got {p}")
    return _STD_NORMAL.inv_cdf(p)


def erf_inv(y):
    """Inverse error function on ``(-1, 1)``.

    Seeded from the normal quantile of the smaller tail, then polished with
    one Newton step against ``erfc`` so results near ``|y| -> 1`` keep their
    relative accuracy.
    """
    y = float(y)
    if not -1.0 < y < 1.0:
        raise ValueError(f"erf_inv requires |y| < 1, got {y}")
    if y == 0.0:
        return 0.0
    sign = 1.0 if y > 0 else -1.0
    tail = (1.0 - abs(y)) / 2.0  # = Phi(-x * sqrt(2))
    x = -normal_quantile(tail) / math.sqrt(2.0)
    # Newton on erfc(x) = 1 - |y|
    resid = math.erfc(x) - (1.0 - abs(y))
    x += resid / (2.0 / math.sqrt(math.pi) * math.exp(-x * x))
    return sign * x

"""Descriptive statistics and ensemble studies of estimators.

An *estimator* here is any callable that maps a sample to a number. To keep
million-replica studies fast, estimators are called on a 2-D block of shape
``(replicas, N)`` and must return one value per row; :func:`sample_mean` and
:func:`sample_variance` already work that way. Wrap a scalar-only function
with :func:`per_replica` to use it anyway.

Two routes are provided for ensemble quantities:

* :func:`summarize_estimator` approximates them by Monte Carlo.
* :func:`enumerate_estimator` computes them exactly for discrete generators
  with a small support by summing over every possible sample.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np

from .distributions import Binomial, Distribution

DEFAULT_CHUNK = 50_000


@dataclass(frozen=True)
class EnsembleSummary:
    ensemble_average: float
    bias: float
    variance: float
    std_dev: float
    mse: float
    rms: float
    n_replicas: int

    def to_dict(self):
        return asdict(self)


def _as_sample(values):
    x = np.asarray(values, dtype=float)
    if x.shape[-1:] == (0,) or x.ndim == 0:
        raise ValueError("sample must contain at least one value")
    if not np.all(np.isfinite(x)):
        raise ValueError("sample values must be finite")
    return x


def sample_mean(values):
    """Arithmetic mean along the last axis."""
    return np.mean(_as_sample(values), axis=-1)


def sample_variance(values):
    """Sample variance with divisor ``N``, computed as mean(x^2) - mean(x)^2.

    The divisor is deliberately ``N``: this estimator is biased, with
    ``<s^2> = V (1 - 1/N)``.
    """
    x = _as_sample(values)
    return np.mean(x * x, axis=-1) - np.mean(x, axis=-1) ** 2


def per_replica(func):
    """Lift a scalar ``sample -> float`` function to the row-wise convention."""

    def wrapped(block):
        block = np.asarray(block, dtype=float)
        if block.ndim == 1:
            return func(block)
        return np.array([func(row) for row in block])

    wrapped.__name__ = getattr(func, "__name__", "estimator")
    return wrapped


def _summarize(estimates, weights, truth, n_replicas):
    # two-pass moments with compensated summation; weights sum to 1
    avg = math.fsum(weights * estimates)
    variance = math.fsum(weights * (estimates - avg) ** 2)
    mse = math.fsum(weights * (estimates - truth) ** 2)
    return EnsembleSummary(
        ensemble_average=avg,
        bias=avg - truth,
        variance=variance,
        std_dev=math.sqrt(variance),
        mse=mse,
        rms=math.sqrt(mse),
        n_replicas=n_replicas,
    )


def replica_estimates(estimator, generator: Distribution, n_per_replica, n_replicas, seed, chunk=DEFAULT_CHUNK):
    """Estimator values for ``n_replicas`` simulated samples.

    Replicas are produced in fixed-size chunks, each from its own stream
    spawned off ``seed``. The output depends only on (seed, chunk), never on
    how the chunks are scheduled.
    """
    if n_per_replica < 1:
        raise ValueError(f"n_per_replica must be >= 1, got {n_per_replica}")
    if n_replicas < 1:
        raise ValueError(f"n_replicas must be >= 1, got {n_replicas}")
    n_chunks = -(-n_replicas // chunk)
    streams = np.random.SeedSequence(seed).spawn(n_chunks)
    out = np.empty(n_replicas)
    for i, ss in enumerate(streams):
        lo = i * chunk
        hi = min(lo + chunk, n_replicas)
        rng = np.random.default_rng(ss)
        block = generator.sample(rng, (hi - lo) * n_per_replica).reshape(hi - lo, n_per_replica)
        out[lo:hi] = estimator(block)
    return out


def summarize_estimator(estimator, truth, generator: Distribution, n_per_replica, n_replicas, seed=0, chunk=DEFAULT_CHUNK):
    """Monte Carlo approximation of the ensemble average, bias, variance, MSE and RMS.

    Args:
        estimator: row-wise estimator (see module docstring).
        truth: the value ``mu`` the estimator targets.
        generator: distribution each datum is drawn from.
        n_per_replica: sample size ``N`` of one simulated experiment.
        n_replicas: number of simulated experiments, at least 2.
        seed: root seed; identical seeds give identical summaries.
    """
    if n_replicas < 2:
        raise ValueError(f"n_replicas must be >= 2, got {n_replicas}")
    est = replica_estimates(estimator, generator, n_per_replica, n_replicas, seed, chunk)
    weights = np.full(n_replicas, 1.0 / n_replicas)
    return _summarize(est, weights, float(truth), n_replicas)


def enumerate_estimator(estimator, truth, generator: Distribution, n_per_replica):
    """Exact ensemble quantities by summing over every possible sample.

    Only for discrete generators with a finite (or truncated) support; the
    number of terms is ``len(support) ** n_per_replica``.
    """
    if not generator.discrete or not hasattr(generator, "support"):
        raise ValueError("exact enumeration needs a discrete generator with a support")
    support = np.array(list(generator.support()), dtype=float)
    probs = np.array([generator.density(k) for k in support])
    n_terms = len(support) ** n_per_replica
    if n_terms > 5_000_000:
        raise ValueError(f"enumeration would need {n_terms} terms")
    samples = np.array(list(itertools.product(support, repeat=n_per_replica)))
    idx = np.array(list(itertools.product(range(len(support)), repeat=n_per_replica)))
    weights = np.prod(probs[idx], axis=1)
    est = np.asarray(estimator(samples), dtype=float)
    return _summarize(est, weights, float(truth), n_terms)


def efficiency_estimates(k: int, n: int):
    """Estimates of an efficiency ``p`` and of ``p^2`` from ``k`` passes out of ``n``.

    Returns ``(p_hat, p2_naive, p2_unbiased)`` where ``p2_naive = (k/n)^2`` and
    ``p2_unbiased = k (k - 1) / (n (n - 1))``. The unbiased form needs
    ``n >= 2`` and returns 0 for a single success.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0 <= k <= n:
        raise ValueError(f"k must lie in [0, n], got k={k}, n={n}")
    if n < 2:
        raise ValueError("the unbiased p^2 estimate needs n >= 2")
    p_hat = k / n
    return p_hat, p_hat * p_hat, k * (k - 1) / (n * (n - 1))


def efficiency_bias(n: int, p: float):
    """Exact biases ``(naive, unbiased)`` of the two ``p^2`` estimators.

    Sums over all outcomes ``k = 0..n`` of Binomial(n, p).
    """
    dist = Binomial(n, p)
    naive = math.fsum(dist.density(k) * efficiency_estimates(k, n)[1] for k in range(n + 1))
    unbiased = math.fsum(dist.density(k) * efficiency_estimates(k, n)[2] for k in range(n + 1))
    return naive - p * p, unbiased - p * p

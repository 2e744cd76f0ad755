"""Batch estimators and fixed-budget tests.

Two estimators of collision probability from an i.i.d. sample: the
all-pairs collision frequency (a U-statistic, unbiased) and the plug-in
value at the empirical distribution (biased up by roughly (1-C)/n).
Batch testing is testing-by-learning: draw the sample size that the
estimator's worst-case analysis prescribes for additive error eps/2,
then reject when the estimate sits more than eps/2 from the null.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import DiscreteDistribution, sample

__all__ = [
    "BatchSampleSizeSpec",
    "BatchTestResult",
    "u_statistic",
    "plug_in",
    "plug_in_sample_size",
    "u_statistic_sample_size",
    "batch_test",
]

_ESTIMATORS = ("plug_in", "u_statistic")


def _value_counts(samples) -> tuple[np.ndarray, int]:
    x = np.asarray(samples)
    if x.ndim != 1:
        raise ValueError("samples must be a 1-d sequence")
    _, counts = np.unique(x, return_counts=True)
    return counts, x.size


def u_statistic(samples) -> float:
    """All-pairs collision frequency 2/(n(n-1)) sum_{i<j} 1{x_i = x_j}.

    Computed in O(n) from value counts: (sum c_v^2 - n) / (n(n-1)).
    Unbiased for the collision probability.
    """
    counts, n = _value_counts(samples)
    if n < 2:
        raise ValueError(f"u_statistic needs at least 2 samples, got {n}")
    return float((counts @ counts - n) / (n * (n - 1)))


def plug_in(samples) -> float:
    """Collision probability of the empirical distribution: sum (c_v/n)^2."""
    counts, n = _value_counts(samples)
    if n < 1:
        raise ValueError("plug_in needs at least 1 sample")
    return float(counts @ counts) / (n * n)


def plug_in_sample_size(epsilon: float, delta: float, f32_bound: float = 1.0) -> int:
    """Worst-case batch size for the plug-in estimator at additive error
    epsilon: ceil((8/eps^2) max(200 F_{3/2}^2, ln(2/delta))).

    f32_bound is an upper bound on the 3/2 frequency moment; 1 always
    works, sharper values shrink the first term.
    """
    _check_eps_delta(epsilon, delta)
    if not (0 < f32_bound <= 1):
        raise ValueError(f"f32_bound must lie in (0, 1], got {f32_bound!r}")
    return math.ceil(
        (8.0 / (epsilon * epsilon))
        * max(200.0 * f32_bound * f32_bound, math.log(2.0 / delta))
    )


def u_statistic_sample_size(
    epsilon: float, delta: float, variance_bound: float = 1.0
) -> int:
    """Worst-case batch size for the U-statistic at additive error epsilon:
    ceil(max(32 (F_3 - F_2^2) ln(4/delta)/eps^2, (128 + 1/6) ln(4/delta)/eps)).

    variance_bound caps F_3 - F_2^2; it is exactly 0 for the uniform
    distribution, where the linear term takes over.
    """
    _check_eps_delta(epsilon, delta)
    if not (0 <= variance_bound <= 1):
        raise ValueError(f"variance_bound must lie in [0, 1], got {variance_bound!r}")
    log_term = math.log(4.0 / delta)
    return math.ceil(
        max(
            32.0 * variance_bound * log_term / (epsilon * epsilon),
            (128.0 + 1.0 / 6.0) * log_term / epsilon,
        )
    )


def _check_eps_delta(epsilon: float, delta: float) -> None:
    if not (0 < epsilon <= 1):
        raise ValueError(f"epsilon must lie in (0, 1], got {epsilon!r}")
    if not (0 < delta <= 1):
        raise ValueError(f"delta must lie in (0, 1], got {delta!r}")


@dataclass(frozen=True)
class BatchSampleSizeSpec:
    """Estimator choice plus the error target and optional moment bounds
    that determine the batch size."""

    estimator: str
    epsilon: float
    delta: float
    f32_bound: float = 1.0
    variance_bound: float = 1.0

    def __post_init__(self):
        if self.estimator not in _ESTIMATORS:
            raise ValueError(f"estimator must be one of {_ESTIMATORS}, got {self.estimator!r}")
        _check_eps_delta(self.epsilon, self.delta)

    def sample_size(self) -> int:
        if self.estimator == "plug_in":
            return plug_in_sample_size(self.epsilon, self.delta, self.f32_bound)
        return u_statistic_sample_size(self.epsilon, self.delta, self.variance_bound)


@dataclass(frozen=True)
class BatchTestResult:
    rejected: bool
    estimate: float
    n: int


def batch_test(
    d: DiscreteDistribution,
    c0: float,
    epsilon: float,
    delta: float,
    estimator: str,
    rng: np.random.Generator,
    f32_bound: float = 1.0,
    variance_bound: float = 1.0,
) -> BatchTestResult:
    """Fixed-budget test of C(p) = c0 at tolerance epsilon.

    Learns the collision probability to additive error eps/2 with the
    chosen estimator's prescribed batch size, then rejects when the
    estimate differs from c0 by more than eps/2.
    """
    if not (0 <= c0 <= 1):
        raise ValueError(f"c0 must lie in [0, 1], got {c0!r}")
    spec = BatchSampleSizeSpec(
        estimator=estimator,
        epsilon=epsilon,
        delta=delta,
        f32_bound=f32_bound,
        variance_bound=variance_bound,
    )
    n = spec.sample_size()
    x = sample(d, rng, size=n)
    estimate = plug_in(x) if estimator == "plug_in" else u_statistic(x)
    return BatchTestResult(rejected=abs(estimate - c0) > epsilon / 2.0, estimate=estimate, n=n)

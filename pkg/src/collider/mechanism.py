"""Private collision probability estimation end to end.

The server splits an expected n users into g groups of Poisson size,
collects one salted hash bit per user, turns each group's bit sum V_j
into the debiased statistic C_j = r (V_j^2 - m) / m^2, averages the C_j
within supergroups, and outputs the median of the supergroup means.
A one-hot bit-flipping baseline (estimate the distribution privately,
then square-and-sum it) is included for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import DiscreteDistribution, sample
from .ldp import HashChannel, PrivacyParams, required_salts

__all__ = [
    "InfeasiblePlanError",
    "MechanismPlan",
    "EstimateResult",
    "plan_mechanism",
    "recommended_n",
    "run_mechanism",
    "group_statistics",
    "lower_median",
    "krappor_indirect_estimate",
]


class InfeasiblePlanError(ValueError):
    """The requested user budget cannot fill the group layout."""


@dataclass(frozen=True)
class MechanismPlan:
    """Group layout: g groups of expected size m, partitioned into a
    supergroups of b groups each (the last may be short)."""

    n: int
    eps_rel: float
    delta: float
    g: int
    m: float
    a: int
    b: int


@dataclass(frozen=True)
class EstimateResult:
    """Raw mechanism output.

    c_hat is the lower median of the supergroup means and is reported
    unclamped (it can be negative or exceed 1); users_consumed is the
    realized Poisson total.
    """

    c_hat: float
    per_supergroup_means: np.ndarray
    users_consumed: int


def plan_mechanism(
    n: int, eps_rel: float, delta: float, params: PrivacyParams
) -> MechanismPlan:
    """Lay out groups for an expected n users.

    g = ceil(160 ln(1/delta) / eps_rel^2), m = n/g, a = ceil(8 ln(1/delta)),
    b = ceil(g/a). All counts round up so the error analysis direction is
    preserved.
    """
    if not (0 < eps_rel <= 1):
        raise ValueError(f"eps_rel must lie in (0, 1], got {eps_rel!r}")
    if not (0 < delta < 1):
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")
    if n < 1:
        raise ValueError(f"n must be positive, got {n!r}")
    required_salts(params.alpha, params.beta)  # fail fast on a bad budget
    log_inv_delta = math.log(1.0 / delta)
    g = math.ceil(160.0 * log_inv_delta / (eps_rel * eps_rel))
    a = math.ceil(8.0 * log_inv_delta)
    b = math.ceil(g / a)
    if n < g:
        raise InfeasiblePlanError(
            f"need at least one expected user per group: n >= {g}, got {n}"
        )
    return MechanismPlan(n=n, eps_rel=eps_rel, delta=delta, g=g, m=n / g, a=a, b=b)


def recommended_n(
    c_lower: float, eps_rel: float, delta: float, params: PrivacyParams
) -> int:
    """Expected user count sufficient for the (eps_rel, delta) guarantee,
    given a caller-asserted lower bound c_lower on the true collision
    probability: ceil(1280 r ln(1/delta) / (eps_rel^2 c_lower))."""
    if not (0 < c_lower <= 1):
        raise ValueError(f"c_lower must lie in (0, 1], got {c_lower!r}")
    if not (0 < eps_rel <= 1):
        raise ValueError(f"eps_rel must lie in (0, 1], got {eps_rel!r}")
    if not (0 < delta < 1):
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")
    r = required_salts(params.alpha, params.beta)
    return math.ceil(1280.0 * r * math.log(1.0 / delta) / (eps_rel * eps_rel * c_lower))


def group_statistics(
    channel: HashChannel,
    d: DiscreteDistribution,
    m: float,
    g: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, int]:
    """Simulate g independent groups of expected size m.

    Returns (C_j array, realized user total). Each group j draws
    N_j ~ Poisson(m) users; every user draws a sample and a salt and
    reports the sign of the keyed hash of <j, salt, sample>. The debias
    uses the expected size m, not N_j (the Poissonization argument needs
    exactly that). Group draws are consumed in group-index order, so the
    result is a deterministic function of the generator state.
    """
    if m <= 0:
        raise ValueError(f"expected group size must be positive, got {m!r}")
    r = channel.r
    k = d.k
    n_j = rng.poisson(m, size=g)
    total = int(n_j.sum())
    x = sample(d, rng, size=total)
    salts = rng.integers(1, r + 1, size=total)
    offsets = np.concatenate(([0], np.cumsum(n_j)))
    v = np.zeros(g, dtype=np.int64)
    for j in range(g):
        lo, hi = offsets[j], offsets[j + 1]
        if hi == lo:
            continue
        table = channel.sign_table(j, k)
        v[j] = table[salts[lo:hi] - 1, x[lo:hi] - 1].sum()
    c_j = r * (v.astype(np.float64) ** 2 - m) / (m * m)
    return c_j, total


def lower_median(values: np.ndarray) -> float:
    """Median taking the lower of the two central order statistics when the
    count is even; deterministic and permutation invariant."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("median of an empty vector")
    return float(np.sort(values)[(values.size - 1) // 2])


def run_mechanism(
    plan: MechanismPlan,
    channel: HashChannel,
    d: DiscreteDistribution,
    rng: np.random.Generator,
) -> EstimateResult:
    """Execute the mechanism under a plan: simulate the groups, average the
    group statistics within supergroups, output the median mean."""
    c_j, total = group_statistics(channel, d, plan.m, plan.g, rng)
    starts = np.arange(0, plan.g, plan.b)
    sizes = np.diff(np.append(starts, plan.g))
    means = np.add.reduceat(c_j, starts) / sizes
    return EstimateResult(
        c_hat=lower_median(means),
        per_supergroup_means=means,
        users_consumed=total,
    )


def krappor_indirect_estimate(
    d: DiscreteDistribution, n: int, alpha: float, rng: np.random.Generator
) -> float:
    """One-hot bit-flipping baseline: estimate the distribution privately,
    then take the collision probability of the estimate.

    Each of n users reports their one-hot sample vector with every bit
    independently flipped with probability 1/(e^(alpha/2) + 1). The server
    averages the reports and debiases entrywise with
    a = (e^(alpha/2) + 1)/(e^(alpha/2) - 1), b = 1/(e^(alpha/2) - 1).
    Returns sum of squared debiased entries, unclipped.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n!r}")
    if not (alpha > 0):
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    k = d.k
    half = math.exp(alpha / 2.0)
    flip = 1.0 / (half + 1.0)
    a = (half + 1.0) / (half - 1.0)
    b = 1.0 / (half - 1.0)
    x = sample(d, rng, size=n)
    one_hot = np.zeros((n, k), dtype=bool)
    one_hot[np.arange(n), x - 1] = True
    flipped = one_hot ^ (rng.random((n, k)) < flip)
    p_hat = flipped.mean(axis=0)
    p_tilde = a * p_hat - b
    return float(p_tilde @ p_tilde)

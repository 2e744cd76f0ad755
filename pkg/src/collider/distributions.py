"""Discrete distributions: construction, sampling, and exact functionals.

Support elements are the integers 1..k. A distribution is an immutable
probability vector; sampling goes through a precomputed cumulative array
(inverse CDF, O(log k) per draw). Functionals (collision probability,
frequency moments, total variation, KL) are evaluated exactly in double
precision.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "AbsoluteContinuityError",
    "DiscreteDistribution",
    "TwoPointPair",
    "new_uniform",
    "new_power_law",
    "new_exponential",
    "new_two_point_pair",
    "random_distribution",
    "sample",
    "collision_probability",
    "frequency_moment",
    "tv_distance",
    "kl_divergence",
    "parse_distribution_spec",
]

_SUM_TOL = 1e-12


class AbsoluteContinuityError(ValueError):
    """KL divergence is undefined: the second argument assigns zero mass
    somewhere the first does not."""


@dataclass(frozen=True)
class DiscreteDistribution:
    """Probability vector over support {1, .., k}.

    Entries must be non-negative and sum to 1 within 1e-12. Instances are
    immutable and safe to share across threads; callers own their random
    sources.
    """

    probs: np.ndarray
    _cdf: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size < 1:
            raise ValueError("probs must be a non-empty 1-d vector")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise ValueError("probs must be finite and non-negative")
        total = math.fsum(probs.tolist())
        if abs(total - 1.0) > _SUM_TOL:
            raise ValueError(f"probs must sum to 1 within {_SUM_TOL}, got {total!r}")
        probs = probs.copy()
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        cdf = np.cumsum(probs)
        cdf[-1] = 1.0
        cdf.setflags(write=False)
        object.__setattr__(self, "_cdf", cdf)

    @property
    def k(self) -> int:
        """Support size."""
        return self.probs.size

    @classmethod
    def from_weights(cls, weights) -> "DiscreteDistribution":
        """Normalize non-negative weights into a distribution.

        Normalization divides by the compensated (fsum) total so the
        sum-to-1 invariant holds at 1e-12 even for k up to 1e6.
        """
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("weights must be a non-empty 1-d vector")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and non-negative")
        total = math.fsum(w.tolist())
        if total <= 0:
            raise ValueError("weights must have positive total mass")
        return cls(w / total)


@dataclass(frozen=True)
class TwoPointPair:
    """Hard instance pair: p0 spreads half its mass over the first K-1
    elements, p1 tilts that mass by a factor (1 -+ tau)."""

    p0: DiscreteDistribution
    p1: DiscreteDistribution
    tau: float
    K: int


def _check_k(k) -> int:
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool) or k < 1:
        raise ValueError(f"support size must be a positive integer, got {k!r}")
    return int(k)


def new_uniform(k: int) -> DiscreteDistribution:
    """Uniform distribution on {1, .., k}; collision probability 1/k."""
    k = _check_k(k)
    return DiscreteDistribution(np.full(k, 1.0 / k))


def new_power_law(k: int) -> DiscreteDistribution:
    """Power law p_i proportional to 1/i."""
    k = _check_k(k)
    return DiscreteDistribution.from_weights(1.0 / np.arange(1, k + 1))


def new_exponential(k: int) -> DiscreteDistribution:
    """Exponential decay p_i proportional to exp(-i)."""
    k = _check_k(k)
    return DiscreteDistribution.from_weights(np.exp(-np.arange(1, k + 1, dtype=np.float64)))


def new_two_point_pair(K: int, tau: float) -> TwoPointPair:
    """Construct the two-point instance pair for support size K >= 2.

    p0 = (1/(2(K-1)), .., 1/(2(K-1)), 1/2)
    p1 = ((1-tau)/(2(K-1)), .., (1-tau)/(2(K-1)), (1+tau)/2)
    """
    K = _check_k(K)
    if K < 2:
        raise ValueError(f"two-point pair needs K >= 2, got {K}")
    if not (0.0 < tau < 1.0):
        raise ValueError(f"tau must lie in (0, 1), got {tau!r}")
    base = np.full(K, 1.0 / (2 * (K - 1)))
    base[-1] = 0.5
    tilted = np.full(K, (1.0 - tau) / (2 * (K - 1)))
    tilted[-1] = (1.0 + tau) / 2.0
    return TwoPointPair(DiscreteDistribution(base), DiscreteDistribution(tilted), float(tau), K)


def random_distribution(k: int, rng: np.random.Generator) -> DiscreteDistribution:
    """Random interior point of the simplex: k Exponential(1) draws, normalized."""
    k = _check_k(k)
    return DiscreteDistribution.from_weights(rng.exponential(1.0, size=k))


def sample(d: DiscreteDistribution, rng: np.random.Generator, size: int | None = None):
    """Draw support element ids (1..k) from d.

    Returns a scalar int when size is None, else an int64 array of the
    requested length. Deterministic given the generator state.
    """
    if size is None:
        u = rng.random()
        return int(np.searchsorted(d._cdf, u, side="right")) + 1
    u = rng.random(size)
    return np.searchsorted(d._cdf, u, side="right").astype(np.int64) + 1


def collision_probability(d: DiscreteDistribution) -> float:
    """C = sum of squared probabilities, the chance two draws coincide."""
    p = d.probs
    return float(p @ p)


def frequency_moment(d: DiscreteDistribution, order: float) -> float:
    """Frequency moment of the given positive order: sum_i p_i**order.

    Order 2 is the collision probability; order 1 is 1 by normalization.
    """
    if not (order > 0):
        raise ValueError(f"moment order must be positive, got {order!r}")
    return float(np.sum(d.probs**order))


def tv_distance(d1: DiscreteDistribution, d2: DiscreteDistribution) -> float:
    """Total variation distance, (1/2) sum |p_i - q_i|, over a shared support."""
    if d1.k != d2.k:
        raise ValueError(f"support sizes differ: {d1.k} vs {d2.k}")
    return float(0.5 * np.sum(np.abs(d1.probs - d2.probs)))


def kl_divergence(d1: DiscreteDistribution, d2: DiscreteDistribution) -> float:
    """KL divergence sum p_i ln(p_i/q_i) in nats, with 0 ln 0 := 0.

    Raises AbsoluteContinuityError if some q_i = 0 < p_i.
    """
    if d1.k != d2.k:
        raise ValueError(f"support sizes differ: {d1.k} vs {d2.k}")
    p, q = d1.probs, d2.probs
    bad = (q == 0) & (p > 0)
    if np.any(bad):
        raise AbsoluteContinuityError(
            f"q is zero at element {int(np.flatnonzero(bad)[0]) + 1} where p is positive"
        )
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


_SPEC_RE = re.compile(r"^(?P<name>[a-z]+):(?P<args>.+)$")


def parse_distribution_spec(spec: str) -> DiscreteDistribution:
    """Parse a CLI distribution spec string.

    Recognized forms:
      uniform:k=<int>
      powerlaw:k=<int>
      exponential:k=<int>
      twopoint:k=<int>,tau=<real>,side=<0|1>
    """
    m = _SPEC_RE.match(spec.strip())
    if not m:
        raise ValueError(f"malformed distribution spec {spec!r}")
    name = m.group("name")
    args: dict[str, str] = {}
    for token in m.group("args").split(","):
        if "=" not in token:
            raise ValueError(f"malformed distribution spec token {token!r} in {spec!r}")
        key, _, value = token.partition("=")
        args[key.strip()] = value.strip()

    def _int(key):
        try:
            return int(args[key])
        except KeyError:
            raise ValueError(f"distribution spec {spec!r} is missing {key}=") from None
        except ValueError:
            raise ValueError(f"bad integer for {key}= in {spec!r}: {args[key]!r}") from None

    def _float(key):
        try:
            return float(args[key])
        except KeyError:
            raise ValueError(f"distribution spec {spec!r} is missing {key}=") from None
        except ValueError:
            raise ValueError(f"bad number for {key}= in {spec!r}: {args[key]!r}") from None

    if name == "uniform":
        return new_uniform(_int("k"))
    if name == "powerlaw":
        return new_power_law(_int("k"))
    if name == "exponential":
        return new_exponential(_int("k"))
    if name == "twopoint":
        pair = new_two_point_pair(_int("k"), _float("tau"))
        side = _int("side")
        if side not in (0, 1):
            raise ValueError(f"twopoint side must be 0 or 1, got {side}")
        return pair.p1 if side else pair.p0
    raise ValueError(f"unknown distribution {name!r} in spec {spec!r}")

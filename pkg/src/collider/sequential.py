"""Anytime sequential test of H0: C(p) = c0.

The tester maintains the all-pairs collision count incrementally: sample
i contributes T_i = (occurrences of x_i so far) - (i-1) c0, so the running
statistic 2/(i(i-1)) * sum_j T_j equals U_i - c0, where U_i is the
all-pairs collision frequency. The null is rejected as soon as the
absolute statistic strictly exceeds a time-uniform boundary that shrinks
like sqrt(log log i / i), making the decision valid at every sample size
simultaneously. The tester never accepts; a finite run that exhausts its
budget reports that explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import DiscreteDistribution, sample

__all__ = ["Verdict", "SeqTestState", "threshold", "run_test", "collision_statistic_trace"]

_CHUNK = 16384


def threshold(i: int, delta: float) -> float:
    """Rejection boundary 3.2 sqrt((max(ln ln i, 0) + 0.72 ln(20.8/delta)) / i).

    Natural logs; ln ln i is clamped at 0 below i = e^e so the boundary is
    defined (and only tightened) for small i. Comparison starts at i = 2.
    """
    if i < 2:
        raise ValueError(f"boundary is defined for i >= 2, got {i!r}")
    if not (0 < delta < 1):
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")
    loglog = max(math.log(math.log(i)), 0.0)
    return 3.2 * math.sqrt((loglog + 0.72 * math.log(20.8 / delta)) / i)


def _threshold_vec(i: np.ndarray, delta: float) -> np.ndarray:
    loglog = np.maximum(np.log(np.log(i)), 0.0)
    return 3.2 * np.sqrt((loglog + 0.72 * math.log(20.8 / delta)) / i)


@dataclass(frozen=True)
class Verdict:
    """Outcome of a sequential run.

    budget_exhausted distinguishes "ran out of samples" from a rejection;
    the tester itself never accepts. n_at_decision is present only on
    rejection.
    """

    rejected: bool
    n_at_decision: int | None
    samples_consumed: int
    budget_exhausted: bool = False


@dataclass
class SeqTestState:
    """Incremental tester state; single-owner, mutated sequentially.

    threshold_scale widens the boundary (the private tester passes
    sqrt(2r)); the non-private test uses 1.
    """

    c0: float
    delta: float
    threshold_scale: float = 1.0
    i: int = 0
    counts: dict = field(default_factory=dict)
    collision_sum: int = 0
    rejected: bool = False

    def __post_init__(self):
        if not (0 <= self.c0 <= 1):
            raise ValueError(f"c0 must lie in [0, 1], got {self.c0!r}")
        if not (0 < self.delta < 1):
            raise ValueError(f"delta must lie in (0, 1), got {self.delta!r}")

    @property
    def t_cumsum(self) -> float:
        """Exact running sum of T_j (collision part kept in integers)."""
        return self.collision_sum - self.c0 * self.i * (self.i - 1) / 2.0

    @property
    def statistic(self) -> float:
        """2/(i(i-1)) * sum T_j = U_i - c0; defined for i >= 2."""
        if self.i < 2:
            return math.nan
        return 2.0 * self.collision_sum / (self.i * (self.i - 1)) - self.c0

    def update(self, x) -> Verdict | None:
        """Observe one sample; return a Verdict on rejection, else None.

        T_i is formed from the count of x before insertion. Amortized O(1).
        """
        if self.rejected:
            raise RuntimeError("tester already rejected; no further updates allowed")
        self.i += 1
        seen = self.counts.get(x, 0)
        self.collision_sum += seen
        self.counts[x] = seen + 1
        if self.i >= 2:
            boundary = self.threshold_scale * threshold(self.i, self.delta)
            if abs(self.statistic) > boundary:
                self.rejected = True
                return Verdict(True, self.i, self.i)
        return None


def _prior_within(ids: np.ndarray) -> np.ndarray:
    """For each position, how many earlier positions in this array hold the
    same value. Stable argsort turns ties into within-run ranks."""
    order = np.argsort(ids, kind="stable")
    sorted_ids = ids[order]
    new_run = np.empty(ids.size, dtype=bool)
    new_run[0] = True
    np.not_equal(sorted_ids[1:], sorted_ids[:-1], out=new_run[1:])
    run_starts = np.flatnonzero(new_run)
    run_id = np.cumsum(new_run) - 1
    rank = np.arange(ids.size, dtype=np.int64) - run_starts[run_id]
    out = np.empty(ids.size, dtype=np.int64)
    out[order] = rank
    return out


def run_stream(next_ids, k: int, c0: float, delta: float, budget: int,
               threshold_scale: float = 1.0, chunk_size: int = _CHUNK) -> Verdict:
    """Chunked scan of a sample stream.

    next_ids(L) must return L fresh 0-based ids in [0, k). Equivalent to
    feeding SeqTestState one sample at a time, but vectorized: within a
    chunk, per-position collision counts combine a running per-value count
    with within-chunk prior occurrences, and the boundary comparison is a
    single array pass.
    """
    if budget < 2:
        raise ValueError(f"budget must be >= 2, got {budget!r}")
    counts = np.zeros(k, dtype=np.int64)
    colsum = 0
    done = 0
    while done < budget:
        length = min(chunk_size, budget - done)
        ids = next_ids(length)
        prior = counts[ids] + _prior_within(ids)
        pair_count = colsum + np.cumsum(prior)
        i = done + np.arange(1, length + 1, dtype=np.int64)
        lo = 1 if done == 0 else 0  # global index 1 never compares
        iv = i[lo:]
        stat = 2.0 * pair_count[lo:] / (iv * (iv - 1.0)) - c0
        boundary = threshold_scale * _threshold_vec(iv, delta)
        hits = np.flatnonzero(np.abs(stat) > boundary)
        if hits.size:
            n_stop = int(iv[hits[0]])
            return Verdict(True, n_stop, n_stop)
        counts += np.bincount(ids, minlength=k)
        colsum = int(pair_count[-1])
        done += length
    return Verdict(False, None, budget, budget_exhausted=True)


def run_test(d: DiscreteDistribution, c0: float, delta: float, budget: int,
             rng: np.random.Generator) -> Verdict:
    """Feed samples from d into the tester until rejection or budget
    exhaustion. Deterministic given the generator state."""
    if not (0 <= c0 <= 1):
        raise ValueError(f"c0 must lie in [0, 1], got {c0!r}")
    if not (0 < delta < 1):
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")
    return run_stream(lambda length: sample(d, rng, size=length) - 1, d.k, c0, delta, budget)


def collision_statistic_trace(samples, c0: float) -> np.ndarray:
    """Running statistic U_i - c0 for every prefix of a sample sequence
    (nan at i = 1). Convenience for diagnostics and tests."""
    ids = np.asarray(samples)
    prior = _prior_within(ids)
    # per-value running counts across the whole array equal prior counts here
    pair_count = np.cumsum(prior)
    i = np.arange(1, ids.size + 1, dtype=np.float64)
    out = np.full(ids.size, math.nan)
    out[1:] = 2.0 * pair_count[1:] / (i[1:] * (i[1:] - 1.0)) - c0
    return out

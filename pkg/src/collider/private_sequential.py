"""Private sequential testers.

PSQ feeds the non-private tester's machinery with one-bit hashed reports:
each user draws a private salt, hashes <salt, sample>, and the server
tests the +-1 report stream against the biased null c0/(2r) + 1/2 with a
boundary widened by sqrt(2r). The Doubling Tester instead runs the
private estimation mechanism on exponentially growing user batches and
rejects once the estimate sits more than twice its guaranteed half-width
from the null.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import DiscreteDistribution, sample
from .ldp import HashChannel, PrivacyParams, required_salts
from .mechanism import plan_mechanism, run_mechanism
from .sequential import SeqTestState, Verdict, run_stream, threshold

__all__ = [
    "PsqState",
    "DoublingRound",
    "DoublingResult",
    "psq_threshold",
    "biased_null",
    "round_failure_budget",
    "run_psq",
    "run_doubling",
]


def psq_threshold(i: int, delta: float, r: int) -> float:
    """Private boundary: sqrt(2r) times the non-private one."""
    if r < 1:
        raise ValueError(f"salt count must be >= 1, got {r!r}")
    return math.sqrt(2.0 * r) * threshold(i, delta)


def biased_null(c0: float, r: int) -> float:
    """Null value in report space: c0/(2r) + 1/2.

    Hashing maps collision probability C to a report-collision probability
    of C/(2r) + 1/2, so the hashed stream is tested against this value.
    """
    if not (0 <= c0 <= 1):
        raise ValueError(f"c0 must lie in [0, 1], got {c0!r}")
    if r < 1:
        raise ValueError(f"salt count must be >= 1, got {r!r}")
    return c0 / (2.0 * r) + 0.5


@dataclass
class PsqState:
    """Scalar PSQ state: an inner tester over the report alphabet {-1, +1}.

    The channel's ungrouped payload <salt, x> is used; the caller feeds raw
    samples and owns the salt-drawing rng.
    """

    channel: HashChannel
    c0: float
    delta: float

    def __post_init__(self):
        self.r = self.channel.r
        self.c_biased = biased_null(self.c0, self.r)
        self.inner = SeqTestState(
            c0=self.c_biased, delta=self.delta, threshold_scale=math.sqrt(2.0 * self.r)
        )

    def observe(self, x: int, rng: np.random.Generator) -> Verdict | None:
        """Privatize one sample and advance the inner tester."""
        salt = int(rng.integers(1, self.r + 1))
        return self.inner.update(self.channel.sign_ungrouped(salt, x))


def run_psq(
    d: DiscreteDistribution,
    c0: float,
    delta: float,
    params: PrivacyParams,
    budget: int,
    rng: np.random.Generator,
) -> Verdict:
    """Run PSQ until rejection or budget exhaustion.

    A fresh hash function is drawn from rng for the run. Collisions are
    counted among the hash values, so the inner alphabet has two letters.
    """
    if not (0 <= c0 <= 1):
        raise ValueError(f"c0 must lie in [0, 1], got {c0!r}")
    channel = HashChannel(seed=rng.bytes(16), params=params)
    r = channel.r
    table = channel.sign_table_ungrouped(d.k)

    def next_ids(length: int) -> np.ndarray:
        x = sample(d, rng, size=length)
        salts = rng.integers(1, r + 1, size=length)
        reports = table[salts - 1, x - 1]
        return ((reports + 1) >> 1).astype(np.int64)  # -1 -> 0, +1 -> 1

    return run_stream(
        next_ids, 2, biased_null(c0, r), delta, budget,
        threshold_scale=math.sqrt(2.0 * r),
    )


def round_failure_budget(delta: float, t: int) -> float:
    """Per-round failure budget 6 delta / (pi^2 t^2); sums to delta over all
    rounds, so the union bound holds for an unbounded horizon."""
    if t < 1:
        raise ValueError(f"round index must be >= 1, got {t!r}")
    return 6.0 * delta / (math.pi * math.pi * t * t)


@dataclass(frozen=True)
class DoublingRound:
    t: int
    n: int
    delta_t: float
    eps_rel: float
    c_hat: float
    half_width: float
    users_consumed: int
    rejected: bool


@dataclass(frozen=True)
class DoublingResult:
    rejected: bool
    round_at_decision: int | None
    samples_consumed: int
    rounds: list


def run_doubling(
    d: DiscreteDistribution,
    c0: float,
    delta: float,
    params: PrivacyParams,
    n0: int,
    max_rounds: int,
    rng: np.random.Generator,
    c_lower: float,
) -> DoublingResult:
    """Doubling Tester: estimate with n_t = n0 * 2^(t-1) users per round.

    Round t gets failure budget delta_t = 6 delta/(pi^2 t^2). Its
    guaranteed relative error eps_t = sqrt(1280 r ln(1/delta_t)/(n_t
    c_lower)) (clamped to 1) comes from inverting the mechanism's sample
    size bound at the caller's lower bound c_lower <= C(p); the absolute
    half-width w_t = eps_t * max(c0, c_lower) covers the estimate under
    the null for any valid c_lower. Rejects when |c_hat - c0| > 2 w_t;
    never accepts, returns the full round history either way.
    """
    if not (0 <= c0 <= 1):
        raise ValueError(f"c0 must lie in [0, 1], got {c0!r}")
    if not (0 < c_lower <= 1):
        raise ValueError(f"c_lower must lie in (0, 1], got {c_lower!r}")
    if n0 < 1:
        raise ValueError(f"n0 must be >= 1, got {n0!r}")
    if max_rounds < 1:
        raise ValueError(f"max_rounds must be >= 1, got {max_rounds!r}")
    r = required_salts(params.alpha, params.beta)
    rounds = []
    total = 0
    for t in range(1, max_rounds + 1):
        n_t = n0 * (1 << (t - 1))
        delta_t = round_failure_budget(delta, t)
        eps_t = min(
            1.0, math.sqrt(1280.0 * r * math.log(1.0 / delta_t) / (n_t * c_lower))
        )
        plan = plan_mechanism(n_t, eps_t, delta_t, params)
        channel = HashChannel(seed=rng.bytes(16), params=params)
        estimate = run_mechanism(plan, channel, d, rng)
        half_width = eps_t * max(c0, c_lower)
        rejected = abs(estimate.c_hat - c0) > 2.0 * half_width
        total += estimate.users_consumed
        rounds.append(
            DoublingRound(
                t=t,
                n=n_t,
                delta_t=delta_t,
                eps_rel=eps_t,
                c_hat=estimate.c_hat,
                half_width=half_width,
                users_consumed=estimate.users_consumed,
                rejected=rejected,
            )
        )
        if rejected:
            return DoublingResult(True, t, total, rounds)
    return DoublingResult(False, None, total, rounds)

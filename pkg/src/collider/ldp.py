"""Salted one-bit hashing channel and its empirical privacy audit.

Each user prepends a private uniform salt to their sample and sends a
single keyed-hash sign bit. The salt count r is chosen from the privacy
budget (alpha, beta) so that, over the random choice of hash function,
the per-value report distributions for any two samples stay within a
factor e**alpha of each other except with probability beta.

The keyed hash is BLAKE2b with a 128-bit key over a canonical encoding of
the payload: a big-endian 64-bit field count followed by each field as a
big-endian 64-bit integer (so <1, 23> and <12, 3> cannot collide). The
first digest bit gives the sign. This is a deterministic keyed stand-in
for the random function the analysis assumes; audit_privacy is the
empirical check.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from hashlib import blake2b

import numpy as np

__all__ = [
    "InfeasiblePrivacyError",
    "PrivacyParams",
    "HashChannel",
    "required_salts",
    "privatize",
    "audit_privacy",
]


class InfeasiblePrivacyError(ValueError):
    """The privacy budget cannot be met (the salt count diverges)."""


@dataclass(frozen=True)
class PrivacyParams:
    """Local privacy budget: likelihood-ratio cap ln-scale alpha, failure
    probability beta."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha >= 0):
            raise ValueError(f"alpha must be non-negative, got {self.alpha!r}")
        if not (0 < self.beta <= 1):
            raise ValueError(f"beta must lie in (0, 1], got {self.beta!r}")


def required_salts(alpha: float, beta: float) -> int:
    """Salt count r = ceil(6 ((e^a + 1)/(e^a - 1))^2 ln(4/beta)).

    Rounded up: rounding down would weaken the guarantee. alpha = 0 is
    infeasible (r diverges); beta must be below 4 for the log to be
    positive.
    """
    if alpha == 0:
        raise InfeasiblePrivacyError("alpha = 0 needs infinitely many salts")
    if not (alpha > 0):
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    if not (0 < beta < 4):
        raise ValueError(f"beta must lie in (0, 4), got {beta!r}")
    coeff = (math.exp(alpha) + 1.0) / (math.exp(alpha) - 1.0)
    return max(1, math.ceil(6.0 * coeff * coeff * math.log(4.0 / beta)))


def _encode(*fields: int) -> bytes:
    return struct.pack(f">{len(fields) + 1}Q", len(fields), *fields)


@dataclass(frozen=True)
class HashChannel:
    """Immutable report channel: keyed hash seed plus derived salt count.

    Reports are +-1 ints. `sign` uses the grouped payload <group, salt, x>
    of the estimation mechanism; `sign_ungrouped` uses the <salt, x>
    payload of the private sequential tester. Both are pure functions of
    (seed, payload), so channels are shareable across threads.
    """

    seed: bytes
    params: PrivacyParams
    r: int = field(init=False)

    def __post_init__(self):
        if len(self.seed) < 16:
            raise ValueError("seed must be at least 128 bits")
        object.__setattr__(self, "r", required_salts(self.params.alpha, self.params.beta))

    def _bit(self, payload: bytes) -> int:
        return blake2b(payload, digest_size=8, key=self.seed).digest()[0] & 1

    def sign(self, group_id: int, salt: int, x: int) -> int:
        """Report for payload <group_id, salt, x>: +1 or -1."""
        return 2 * self._bit(_encode(group_id, salt, x)) - 1

    def sign_ungrouped(self, salt: int, x: int) -> int:
        """Report for payload <salt, x>: +1 or -1."""
        return 2 * self._bit(_encode(salt, x)) - 1

    def sign_table(self, group_id: int, k: int) -> np.ndarray:
        """All reports for one group as an (r, k) int8 table.

        Entry [s-1, x-1] is sign(group_id, s, x); lets simulations replace
        per-user hashing with a fancy-index lookup.
        """
        bit = self._bit
        prefix = struct.pack(">QQ", 3, group_id)
        out = np.empty((self.r, k), dtype=np.int8)
        for s in range(1, self.r + 1):
            mid = prefix + struct.pack(">Q", s)
            row = out[s - 1]
            for x in range(1, k + 1):
                row[x - 1] = bit(mid + struct.pack(">Q", x))
        return 2 * out - 1

    def sign_table_ungrouped(self, k: int) -> np.ndarray:
        """(r, k) int8 table of sign_ungrouped values."""
        bit = self._bit
        out = np.empty((self.r, k), dtype=np.int8)
        for s in range(1, self.r + 1):
            mid = struct.pack(">QQ", 2, s)
            row = out[s - 1]
            for x in range(1, k + 1):
                row[x - 1] = bit(mid + struct.pack(">Q", x))
        return 2 * out - 1


def privatize(channel: HashChannel, group_id: int, x: int, rng: np.random.Generator) -> int:
    """One user's report: draw a uniform salt in {1..r}, hash <group, salt, x>.

    Deterministic given (seed, group_id, salt, x); the caller-owned rng
    supplies only the salt.
    """
    salt = int(rng.integers(1, channel.r + 1))
    return channel.sign(group_id, salt, x)


def audit_privacy(
    params: PrivacyParams,
    trials: int,
    x: int,
    x_prime: int,
    rng: np.random.Generator,
) -> float:
    """Empirical check of the channel's privacy guarantee.

    Draws `trials` independent hash seeds. For each seed, forms the exact
    per-value report distributions of x and x_prime (averaging the sign
    indicator over all r salts) and flags a violation when either ratio
    p_v/p'_v or p'_v/p_v exceeds e**alpha for some report value v (a
    positive numerator over a zero denominator counts as a violation).
    Returns the violating fraction, which the guarantee bounds by beta.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials!r}")
    if x == x_prime:
        raise ValueError("audit needs two distinct samples")
    r = required_salts(params.alpha, params.beta)
    e_alpha = math.exp(params.alpha)
    group_id = 0
    violations = 0
    for _ in range(trials):
        channel = HashChannel(seed=rng.bytes(16), params=params)
        plus = 0
        plus_prime = 0
        for s in range(1, r + 1):
            plus += channel.sign(group_id, s, x) > 0
            plus_prime += channel.sign(group_id, s, x_prime) > 0
        for p, q in (
            (plus / r, plus_prime / r),
            (1.0 - plus / r, 1.0 - plus_prime / r),
        ):
            if p > e_alpha * q or q > e_alpha * p:
                violations += 1
                break
    return violations / trials

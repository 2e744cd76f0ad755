"""Deterministic seed derivation for reproducible experiments.

Child seeds are derived from a base seed and one or more integer indices
with SplitMix64 (Steele et al.'s avalanche finalizer), so that any
implementation following the same recipe reproduces the same streams:

    state = base_seed
    for index in indices:
        state = splitmix64(state XOR (index * 0x9E3779B97F4A7C15))

All arithmetic is modulo 2**64. Streams themselves are numpy PCG64
generators seeded with the derived value.
"""

from __future__ import annotations

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(z: int) -> int:
    """One SplitMix64 round: add the golden-gamma increment, then avalanche."""
    z = (z + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(base_seed: int, *indices: int) -> int:
    """Mix a base seed with integer indices into a 64-bit child seed."""
    state = base_seed & _MASK64
    for index in indices:
        state = splitmix64(state ^ ((index * _GOLDEN) & _MASK64))
    return state


def derive_key(base_seed: int, *indices: int, nbytes: int = 16) -> bytes:
    """Derive an ``nbytes`` key (default 128 bits) by chaining derive_seed."""
    words = []
    state = derive_seed(base_seed, *indices)
    for _ in range((nbytes + 7) // 8):
        words.append(state.to_bytes(8, "big"))
        state = splitmix64(state)
    return b"".join(words)[:nbytes]


def make_rng(base_seed: int, *indices: int) -> np.random.Generator:
    """PCG64 generator for the stream identified by (base_seed, *indices)."""
    return np.random.Generator(np.random.PCG64(derive_seed(base_seed, *indices)))

"""Deterministic seed derivation and keyed random streams.

Every random quantity in the package is drawn from a numpy Philox
generator (counter-based) keyed by an explicit 64-bit seed.  Seeds for
sub-tasks -- trials of a sweep, candidate draws, retry substreams -- are
derived by folding the sub-task coordinates into the parent seed with
iterated SplitMix64, so any grid point is reproducible in isolation
without replaying the runs before it.

The derivation is fixed and documented here: starting from
``h = base & MASK64``, each integer part ``p`` updates
``h = splitmix64(h XOR (p & MASK64))``.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One SplitMix64 output step (Steele et al. mixing constants)."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return (z ^ (z >> 31)) & MASK64


def derive_seed(base: int, *parts: int) -> int:
    """Mix integer coordinates into ``base``, returning a new 64-bit seed."""
    h = base & MASK64
    for p in parts:
        h = splitmix64((h ^ (int(p) & MASK64)) & MASK64)
    return h


def generator(seed: int) -> np.random.Generator:
    """Philox generator keyed by ``seed``; independent streams per key."""
    return np.random.Generator(np.random.Philox(key=seed & MASK64))

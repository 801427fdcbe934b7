"""Seed derivation and generator construction.

Every stochastic routine takes an explicit 64-bit seed and builds a
``numpy.random.Generator`` over the Philox4x64 counter-based bit generator,
keyed directly by that seed.  Replica streams are obtained with
:func:`derive_seed`, so results never depend on how replicas are scheduled.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """SplitMix64 output function (a bijection on 64-bit integers)."""
    x = (x + _GOLDEN) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(global_seed: int, replica_index: int) -> int:
    """Seed for replica ``replica_index`` of a run seeded with ``global_seed``.

    The global seed is mixed once, then offset by ``(r + 1)`` golden-ratio
    increments and mixed again.  For a fixed global seed the map is a
    bijection of ``r mod 2**64``, hence injective over replica indices.
    """
    base = splitmix64(int(global_seed) & MASK64)
    return splitmix64((base + (int(replica_index) + 1) * _GOLDEN) & MASK64)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed) & MASK64))

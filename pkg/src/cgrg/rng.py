"""Deterministic seed derivation for sub-streams and replicates.

All randomness in the package flows through numpy PCG64 generators whose
seeds are derived from a user seed with the splitmix64 finalizer
(constants 0x9E3779B97F4A7C15, 0xBF58476D1CE4E5B9, 0x94D049BB133111EB).
Mixing the seed with a stream tag gives statistically independent
sub-streams, so e.g. vertex positions and colors never shift when an
edge-only parameter changes.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15

# fixed stream tags
STREAM_POSITIONS = 0
STREAM_COLORS = 1


def splitmix64(z: int) -> int:
    """One splitmix64 output step for a 64-bit state."""
    z = (z + _GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def mix(seed: int, *tags: int) -> int:
    """Fold integer tags into a seed, one splitmix64 step per tag."""
    state = seed & _MASK64
    for t in tags:
        state = splitmix64((state ^ (t & _MASK64)) & _MASK64)
    if not tags:
        state = splitmix64(state)
    return state


def generator(seed: int, *tags: int) -> np.random.Generator:
    """PCG64 generator for the sub-stream identified by (seed, tags)."""
    return np.random.Generator(np.random.PCG64(mix(seed, *tags)))


def replicate_seed(master_seed: int, n: int, replicate: int) -> int:
    """Seed for one (n, replicate) cell of a sweep."""
    return mix(master_seed, n, replicate)

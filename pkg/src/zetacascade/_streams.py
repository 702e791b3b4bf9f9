"""Counter-based random streams and seed derivation.

Every random quantity in the package is a pure function of
(seed_base, role tag, index), so results never depend on scheduling or
worker count.  Disorder phases use a splitmix64 stream keyed by
(seed, prime index); bulk replica sampling uses numpy Generators seeded
through the same derivation.
"""

from __future__ import annotations

import numpy as np

# role tags for seed derivation
ROLE_DISORDER = 1
ROLE_REPLICA = 2
ROLE_PD = 3
ROLE_GENERIC = 4

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV_2_53 = 1.0 / float(1 << 53)


def _finalize(z: np.ndarray) -> np.ndarray:
    # splitmix64 output function
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def mix64(*parts: int) -> int:
    """Collapse a tuple of integers into one well-mixed 64-bit value."""
    state = np.uint64(0)
    with np.errstate(over="ignore"):
        for p in parts:
            state = _finalize((state + np.uint64(p & 0xFFFFFFFFFFFFFFFF)) * _GOLDEN + _GOLDEN)
    return int(state)


def uniform_stream(seed: int, start: int, count: int) -> np.ndarray:
    """Doubles in [0, 1) for counter positions start..start+count-1.

    Chunk-stable: concatenating two adjacent ranges equals one big range.
    """
    if count == 0:
        return np.empty(0)
    base = np.uint64(mix64(seed))
    idx = np.arange(start, start + count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = _finalize(base + (idx + np.uint64(1)) * _GOLDEN)
    return (z >> np.uint64(11)).astype(np.float64) * _INV_2_53


def phase_stream(seed: int, start: int, count: int) -> np.ndarray:
    """Angles in [0, 2*pi), one per (seed, index) pair."""
    return uniform_stream(seed, start, count) * (2.0 * np.pi)


def substream_rng(seed_base: int, role: int, index: int) -> np.random.Generator:
    """Independent numpy Generator for one (role, index) slot."""
    return np.random.default_rng(np.random.SeedSequence((seed_base & 0xFFFFFFFFFFFFFFFF, role, index)))

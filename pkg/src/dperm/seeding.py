"""Deterministic seed derivation for trial streams.

Stream i of a run rooted at ``root`` is seeded with ``mix64(root ^ i)``,
a splitmix64-style finalizer.  Adding trials therefore never disturbs the
draws of earlier trials, and every trial is reproducible in isolation.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


def mix64(x: int) -> int:
    """Finalize a 64-bit value (splitmix64 constants)."""
    # int() guards against numpy integers, whose & would overflow at 64 bits.
    x = (int(x) + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return (x ^ (x >> 31)) & _MASK


def spawn_seed(root: int, i: int) -> int:
    """Seed for stream ``i``: mix64 of root XOR i."""
    root, i = int(root), int(i)
    if i < 0:
        raise ValueError(f"stream index must be >= 0, got {i}")
    return mix64((root & _MASK) ^ (i & _MASK))


def trial_rng(root: int, i: int) -> np.random.Generator:
    """Independent generator for trial ``i`` under ``root``."""
    return np.random.default_rng(spawn_seed(root, i))

"""Seed derivation for per-trial random streams.

Every trial draws from its own ``random.Random`` seeded by a splitmix64
mix of ``(master_seed, trial_index)``.  Trials are therefore mutually
independent and an ensemble's statistics do not depend on the order in
which trials execute.
"""

from __future__ import annotations

import random

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def derive_trial_seed(master_seed: int, trial_index: int) -> int:
    """splitmix64 finalizer applied to master_seed + (index+1)*golden-ratio."""
    z = (master_seed + (trial_index + 1) * _GOLDEN) & _MASK
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK
    return (z ^ (z >> 31)) & _MASK


def trial_stream(master_seed: int, trial_index: int) -> random.Random:
    """Deterministic per-trial generator; identical (seed, index) -> identical draws."""
    return random.Random(derive_trial_seed(master_seed, trial_index))

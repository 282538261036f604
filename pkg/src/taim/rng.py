"""Deterministic random-stream derivation.

Every random draw in a run is taken from a stream keyed by
(master seed, trial id, step, purpose), so serial and parallel execution
give identical results.
"""

from __future__ import annotations

import numpy as np

PURPOSE = {
    "policy": 1,
    "diffusion": 2,
    "selector": 3,
    "foresight": 4,
    "oracle": 5,
    "verify": 6,
}


def stream(master_seed: int, *keys) -> np.random.Generator:
    """Return a Generator for the sub-stream ``keys`` of ``master_seed``.

    Keys may be ints or names from ``PURPOSE``.
    """
    spawn_key = tuple(PURPOSE[k] if isinstance(k, str) else int(k) for k in keys)
    return np.random.default_rng(np.random.SeedSequence(int(master_seed), spawn_key=spawn_key))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def kernel_seed(rng) -> int:
    """Draw a 63-bit seed for the hash-based kernels."""
    return int(as_generator(rng).integers(0, 2**63 - 1))

"""Seeding contract.

Every random draw in the package goes through ``numpy.random.Generator``
backed by PCG64 (the 128-bit LCG with XSL-RR output, as specified by
O'Neill).  Generators are created from a single unsigned 64-bit integer
seed with :func:`make_rng`.

Independent streams are derived with :func:`mix64`, a SplitMix64 finalizer
applied to ``seed + (stream + 1) * 0x9E3779B97F4A7C15 (mod 2**64)``::

    z = (seed + (stream + 1) * 0x9E3779B97F4A7C15) mod 2**64
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9   mod 2**64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB   mod 2**64
    z =  z ^ (z >> 31)

The experiment harness uses ``rep_seed = mix64(master_seed, rep)`` for the
sample and ``mix64(rep_seed, 1)`` for the clustering run.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX_C1 = 0xBF58476D1CE4E5B9
MIX_C2 = 0x94D049BB133111EB


def mix64(seed: int, stream: int) -> int:
    z = (int(seed) + (int(stream) + 1) * GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * MIX_C1) & MASK64
    z = ((z ^ (z >> 27)) * MIX_C2) & MASK64
    return z ^ (z >> 31)


def make_rng(seed: int) -> np.random.Generator:
    if seed < 0 or seed > MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.Generator(np.random.PCG64(int(seed)))

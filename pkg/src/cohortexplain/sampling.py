"""Seeded random machinery shared by the Monte Carlo code paths."""

from __future__ import annotations

import numpy as np


def rng_from(seed: int, *stream: int) -> np.random.Generator:
    """PCG64 generator seeded from SeedSequence([seed, *stream]).

    The extra stream components (target index, trial index, ...) give
    independent, reproducible substreams for the same user seed.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, stream)])))


def fisher_yates(rng: np.random.Generator, d: int) -> np.ndarray:
    """Uniform permutation of range(d) by an explicit Fisher-Yates shuffle.

    Spelled out rather than delegated so the draw sequence is pinned to the
    generator's integer stream and stable across platforms and library
    versions.
    """
    perm = np.arange(d)
    for i in range(d - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        perm[i], perm[j] = perm[j], perm[i]
    return perm

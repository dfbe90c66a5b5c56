"""Deterministic RNG derivation.

Every random decision in the package flows through a ``numpy.random.Generator``
built here from a master seed plus an integer path, so any artifact can be
reproduced bit-for-bit from the seed recorded in its manifest.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int, *path: int) -> np.random.Generator:
    """Return a generator keyed by ``seed`` and an optional derivation path.

    Distinct paths yield statistically independent streams; the same
    ``(seed, *path)`` always yields the same stream.
    """
    return np.random.default_rng(np.random.SeedSequence([seed, *path]))


def child_seed(seed: int, *path: int) -> int:
    """Derive a 64-bit child seed from ``seed`` and a derivation path."""
    ss = np.random.SeedSequence([seed, *path])
    return int(ss.generate_state(1, np.uint64)[0])

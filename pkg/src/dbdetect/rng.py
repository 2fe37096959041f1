"""Deterministic random substreams.

Every stochastic routine in the package derives its generator here, from a
64-bit user seed, a fixed purpose tag, and optional indices (for example a
trial number).  The generator is Philox, a counter-based PRNG, keyed through
``numpy.random.SeedSequence(seed, spawn_key=(purpose, *index))``, so any
substream is a pure function of ``(seed, purpose, index)`` and results never
depend on execution order, thread count, or how many other streams were
drawn before it.
"""

from __future__ import annotations

import numpy as np

# Purpose tags.  These values are part of the reproducibility contract:
# changing them changes every sampled bit.
SAMPLE_NULL = 1
SAMPLE_ALT = 2
RISK_NULL = 3
RISK_ALT = 4
PD_ESTIMATE = 5


def substream(seed: int, purpose: int, *index: int) -> np.random.Generator:
    """Return the Philox generator keyed by ``(seed, purpose, *index)``."""
    seq = np.random.SeedSequence(int(seed), spawn_key=(int(purpose), *map(int, index)))
    return np.random.Generator(np.random.Philox(seq))


def fisher_yates(rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw a uniform permutation of ``0..n-1`` by the Fisher-Yates shuffle.

    Spelled out (rather than delegated to ``Generator.permutation``) so the
    stream consumption is pinned: exactly ``n - 1`` bounded integers.
    """
    perm = np.arange(n, dtype=np.int64)
    for i in range(n - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        perm[i], perm[j] = perm[j], perm[i]
    return perm

"""Counter-based random streams keyed by (master seed, n, trial).

Every trial owns a private Philox stream whose key is a hash of its
coordinates, so results do not depend on scheduling order or on how many
other trials were requested.
"""
from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def stream(*key: int) -> np.random.Generator:
    """Return a Philox generator keyed by the hashed integer tuple ``key``."""
    words = [int(k) & _MASK64 for k in key]
    ss = np.random.SeedSequence(words)
    return np.random.Generator(np.random.Philox(ss))


def trial_seed(master_seed: int, n: int, trial: int) -> int:
    """64-bit seed recorded for a trial; ``stream(seed)`` reproduces it."""
    ss = np.random.SeedSequence([int(master_seed) & _MASK64, int(n), int(trial)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def trial_stream(master_seed: int, n: int, trial: int) -> tuple[int, np.random.Generator]:
    seed = trial_seed(master_seed, n, trial)
    return seed, stream(seed)

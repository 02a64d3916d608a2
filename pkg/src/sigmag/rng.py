"""Counter-based random streams keyed by integer tuples.

Each stream is a Philox generator whose key is derived from
``(master_seed, *index)``, so the draws for one ensemble member (or one inner
continuation block) never depend on which other members are generated, in
what order, or on how many threads are used.
"""

import numpy as np

_MASK64 = (1 << 64) - 1

# stream tags, so different uses of the same member never share a key
GAUSS = 0
UNIFORM = 1
INNER = 2


def stream(master_seed: int, *index: int) -> np.random.Generator:
    words = [int(master_seed) & _MASK64] + [int(i) for i in index]
    if any(w < 0 for w in words[1:]):
        raise ValueError("stream indices must be non-negative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))


def gaussian_increments(master_seed: int, members, steps: int, dt: float) -> np.ndarray:
    """Brownian increments, shape ``(len(members), steps)``."""
    out = np.empty((len(members), steps))
    sd = np.sqrt(dt)
    for row, k in enumerate(members):
        out[row] = stream(master_seed, k, GAUSS).standard_normal(steps) * sd
    return out


def uniforms(master_seed: int, members, steps: int) -> np.ndarray:
    out = np.empty((len(members), steps))
    for row, k in enumerate(members):
        out[row] = stream(master_seed, k, UNIFORM).random(steps)
    return out

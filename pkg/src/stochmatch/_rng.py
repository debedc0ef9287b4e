"""Counter-based seed derivation.

Every random quantity in the package is a pure function of a user seed and
a few integer counters, so results do not depend on evaluation order or on
how trials are scheduled across workers.
"""
from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# stream tags keep edge draws, arrival draws and trial seeds independent
STREAM_EDGE = 1
STREAM_ARRIVAL = 2
STREAM_TRIAL = 3
STREAM_CHUNK = 4


def mix64(x: int) -> int:
    """splitmix64 finalizer on a Python int."""
    x = (x + _GOLDEN) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def derive_seed(seed: int, *keys: int) -> int:
    h = mix64(seed & _MASK)
    for k in keys:
        h = mix64(h ^ (k & _MASK))
    return h


def hashed_uniform(seed: int, *keys: int) -> float:
    """Uniform in [0, 1) determined by (seed, keys)."""
    return (derive_seed(seed, *keys) >> 11) * (1.0 / (1 << 53))


def _mix64_array(x: np.ndarray) -> np.ndarray:
    x = x + np.uint64(_GOLDEN)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def hashed_uniform_array(seed, *keys) -> np.ndarray:
    """Vectorised `hashed_uniform`; `seed` and `keys` broadcast as arrays.

    Agrees bit-for-bit with the scalar version.
    """
    with np.errstate(over="ignore"):
        h = _mix64_array(np.asarray(seed, dtype=np.int64).astype(np.uint64))
        for k in keys:
            h = _mix64_array(h ^ np.asarray(k, dtype=np.int64).astype(np.uint64))
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def generator(seed: int, *keys: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(seed, *keys)))

"""Counter-based site colors.

The color of a site is a pure function of (seed, trial, i, j): a splitmix64 finalizer is
applied to the trial key and to the packed site coordinate, and the top bit of the result
decides the color. No generator state is shared, so any trial can be regenerated alone.
"""

import numpy as np


_MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def _mix_int(x: int) -> int:
    x &= _MASK
    x = ((x ^ (x >> 30)) * _M1) & _MASK
    x = ((x ^ (x >> 27)) * _M2) & _MASK
    return x ^ (x >> 31)


def _mix(x: np.ndarray) -> np.ndarray:
    x = x ^ (x >> np.uint64(30))
    x = x * np.uint64(_M1)
    x = x ^ (x >> np.uint64(27))
    x = x * np.uint64(_M2)
    return x ^ (x >> np.uint64(31))


def trial_key(seed: int, trial: int) -> int:
    """64-bit key of one trial of one seed."""
    if seed < 0 or trial < 0:
        raise ValueError("Seed and trial index must be non-negative.")
    return _mix_int(_mix_int(seed ^ GOLDEN) + trial * GOLDEN)


def _site_words(i: np.ndarray, j: np.ndarray) -> np.ndarray:
    low = np.uint64(0xFFFFFFFF)
    iu = np.asarray(i, dtype=np.int64).astype(np.uint64) & low
    ju = np.asarray(j, dtype=np.int64).astype(np.uint64) & low
    return (iu << np.uint64(32)) | ju


def site_bits(keys, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    """Open flags for the given sites, one row per key.

    `keys` is a single trial key or a sequence of them; the result has shape
    (n_sites,) or (n_keys, n_sites) accordingly.
    """
    words = _site_words(i, j)
    scalar = np.ndim(keys) == 0
    key_array = np.atleast_1d(np.asarray(keys, dtype=np.uint64))
    with np.errstate(over="ignore"):
        h = _mix(_mix(words[None, :] ^ key_array[:, None]) + np.uint64(GOLDEN))
    bits = (h >> np.uint64(63)).astype(bool)
    return bits[0] if scalar else bits


def trial_bits(seed: int, first_trial: int, stop_trial: int, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    """(stop_trial - first_trial, n_sites) open flags for a contiguous range of trials."""
    keys = np.array([trial_key(seed, t) for t in range(first_trial, stop_trial)], dtype=np.uint64)
    if keys.size == 0:
        return np.zeros((0, np.size(i)), dtype=bool)
    return site_bits(keys, i, j)

"""Counter-based random streams (splitmix64).

Every (pixel, sample) pair owns an independent stream keyed on the global
seed, so renders are deterministic regardless of how work is scheduled
across threads. The state is a single uint64 advanced by the splitmix64
update; `next_u64` returns the mixed output.
"""

import numpy as np
from numba import njit

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV_2_53 = 1.0 / 9007199254740992.0  # 2^-53


@njit(cache=True, inline="always")
def next_u64(state):
    state = state + _GAMMA
    z = state
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    z = z ^ (z >> np.uint64(31))
    return state, z


@njit(cache=True, inline="always")
def next_f64(state):
    """Uniform draw in [0, 1) with 53 random bits."""
    state, z = next_u64(state)
    return state, np.float64(z >> np.uint64(11)) * _INV_2_53


@njit(cache=True, inline="always")
def make_stream(seed, key, salt):
    """Derive an independent stream from (seed, key, salt).

    Two mixing rounds decorrelate nearby keys (consecutive path indices).
    """
    s = np.uint64(seed) ^ (np.uint64(key) * np.uint64(0xD1342543DE82EF95))
    s = s + np.uint64(salt) * _GAMMA
    s, z1 = next_u64(s)
    s, z2 = next_u64(s)
    return z1 ^ (z2 >> np.uint64(1))


# Stream salts: one namespace per consumer so adding draws to one stage
# never shifts another stage's sequence.
SALT_TRACE = 0x7E
SALT_EXTRA_DIRECT = 0xED

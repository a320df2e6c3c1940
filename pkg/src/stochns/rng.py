"""Deterministic random streams.

* ``split_seed`` derives per-trajectory seeds from a master seed with
  SplitMix64.
* Each trajectory owns a xoshiro256** generator whose four state words are
  the first four SplitMix64 outputs of its seed.
* Uniforms are ``(x >> 11) * 2**-53``; Gaussians come in Box-Muller pairs
  ``u1 = 1 - U``, ``u2 = U'``, ``r = sqrt(-2 log u1)``,
  ``(r cos 2 pi u2, r sin 2 pi u2)``.  A request for K normals consumes
  ceil(K/2) pairs and drops the last sine value when K is odd.

The kernels are compiled with numba so the solver loop can draw increments
without leaving compiled code; the same functions are called from Python.
"""
import numpy as np
from numba import njit

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

_U5 = np.uint64(5)
_U7 = np.uint64(7)
_U9 = np.uint64(9)
_U11 = np.uint64(11)
_U17 = np.uint64(17)
_U45 = np.uint64(45)
_U64 = np.uint64(64)
_TWO_M53 = 2.0**-53
_TWO_PI = 2.0 * np.pi


def split_seed(master_seed, index):
    """The (index+1)-th SplitMix64 output for a stream seeded at master_seed."""
    if index < 0:
        raise ValueError(f"index must be >= 0, got {index}")
    state = (master_seed + (index + 1) * GOLDEN) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


@njit(cache=True)
def _rotl(x, k):
    return (x << k) | (x >> (_U64 - k))


@njit(cache=True)
def next_u64(s):
    result = _rotl(s[1] * _U5, _U7) * _U9
    t = s[1] << _U17
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], _U45)
    return result


@njit(cache=True)
def next_uniform(s):
    return np.float64(next_u64(s) >> _U11) * _TWO_M53


@njit(cache=True)
def fill_normals(s, out):
    """Fill ``out`` with standard normals, two per Box-Muller pair."""
    n = out.shape[0]
    i = 0
    while i < n:
        u1 = 1.0 - next_uniform(s)
        u2 = next_uniform(s)
        r = np.sqrt(-2.0 * np.log(u1))
        out[i] = r * np.cos(_TWO_PI * u2)
        if i + 1 < n:
            out[i + 1] = r * np.sin(_TWO_PI * u2)
        i += 2


def seed_state(seed):
    """xoshiro256** state (uint64[4]) for a 64-bit seed."""
    return np.array([split_seed(seed & MASK64, i) for i in range(4)], dtype=np.uint64)


class Stream:
    """Python handle on one generator state.

    The state array is shared with the compiled solver loop, so a
    trajectory and its Stream advance together.
    """

    def __init__(self, seed=None, state=None):
        if state is not None:
            self.state = np.array(state, dtype=np.uint64)
        else:
            self.state = seed_state(int(seed))

    def u64(self):
        return int(next_u64(self.state))

    def uniform(self):
        return float(next_uniform(self.state))

    def normals(self, n):
        out = np.empty(n)
        fill_normals(self.state, out)
        return out

    def copy(self):
        return Stream(state=self.state.copy())

"""Portable random numbers: SplitMix64 plus a frozen Box-Muller normal sampler.

Everything reproducible in qubosmith goes through this module so that a
``(seed, ...)`` tuple pins a result independently of numpy's generators.

SplitMix64 (Steele, Lea & Flood 2014) is used in two forms:

* counter mode, ``splitmix64_at(seed, k)`` = the k-th output (0-based) of the
  generator whose state starts at ``seed``. This is what instance generation
  uses, so any entry can be recomputed in isolation.
* sequential mode inside numba kernels (:func:`next_u64`), one state word per
  read/replica, seeded by :func:`stream_seed`.

Normal deviates (frozen, do not change): outputs ``2m`` and ``2m+1`` form the
pair ``(a, b)``; ``u1 = ((a >> 11) + 1) * 2**-53`` lies in (0, 1],
``u2 = (b >> 11) * 2**-53`` lies in [0, 1);
``r = sqrt(-2 ln u1)``; deviate ``2m`` is ``r cos(2 pi u2)`` and deviate
``2m+1`` is ``r sin(2 pi u2)``. Arithmetic is IEEE-754 binary64 with the
platform libm for log/cos/sin.
"""

import math

import numba as nb
import numpy as np

GOLDEN_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_TWO_M53 = 1.0 / 9007199254740992.0

MASK64 = (1 << 64) - 1


@nb.njit(cache=True, inline="always")
def mix64(z):
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@nb.njit(cache=True, inline="always")
def next_u64(state):
    """Advance a one-element uint64 state array and return the next output."""
    state[0] += GOLDEN_GAMMA
    return mix64(state[0])


@nb.njit(cache=True, inline="always")
def next_double(state):
    return np.float64(next_u64(state) >> _S11) * _TWO_M53


@nb.njit(cache=True, inline="always")
def next_below(state, m):
    """Uniform integer in [0, m) for m <= 2**53."""
    k = np.int64(next_double(state) * m)
    if k >= m:
        k = m - 1
    return k


def to_u64(seed):
    """Map any Python int (negative allowed) onto the uint64 ring."""
    return int(seed) & MASK64


def stream_seed(seed, index):
    """Initial SplitMix64 state for sub-stream ``index`` of ``seed``.

    Sub-streams are what make parallel reads reproducible: read ``r`` of a
    solver always draws from ``stream_seed(seed, r)``, whatever the scheduling.
    """
    return splitmix64_at(splitmix64_at(seed, 0) ^ to_u64(index), 0)


def new_state(seed, index=0):
    return np.array([stream_seed(seed, index)], dtype=np.uint64)


def splitmix64_at(seed, k):
    """Pure-Python counter-mode SplitMix64 output ``k`` for state ``seed``."""
    z = (to_u64(seed) + (k + 1) * 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


@nb.njit(cache=True)
def _normals_kernel(seed, count, out):
    base = np.uint64(seed)
    npairs = (count + 1) // 2
    for m in range(npairs):
        a = mix64(base + np.uint64(2 * m + 1) * GOLDEN_GAMMA)
        b = mix64(base + np.uint64(2 * m + 2) * GOLDEN_GAMMA)
        u1 = (np.float64(a >> _S11) + 1.0) * _TWO_M53
        u2 = np.float64(b >> _S11) * _TWO_M53
        r = math.sqrt(-2.0 * math.log(u1))
        theta = 2.0 * math.pi * u2
        out[2 * m] = r * math.cos(theta)
        if 2 * m + 1 < count:
            out[2 * m + 1] = r * math.sin(theta)


def standard_normals(seed, count):
    """First ``count`` standard normal deviates of the stream keyed by ``seed``."""
    out = np.empty(count, dtype=np.float64)
    if count:
        _normals_kernel(np.uint64(to_u64(seed)), count, out)
    return out


def box_muller_reference(seed, m):
    """Pure-Python deviate ``m``; an independent check on the vectorized kernel."""
    pair = m // 2
    a = splitmix64_at(seed, 2 * pair)
    b = splitmix64_at(seed, 2 * pair + 1)
    u1 = ((a >> 11) + 1) * 2.0**-53
    u2 = (b >> 11) * 2.0**-53
    r = math.sqrt(-2.0 * math.log(u1))
    theta = 2.0 * math.pi * u2
    return r * math.cos(theta) if m % 2 == 0 else r * math.sin(theta)

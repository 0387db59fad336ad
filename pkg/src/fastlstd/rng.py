"""Counter-based SplitMix64 generator.

The k-th output of a stream seeded with ``seed`` is
``mix(seed + k * 0x9E3779B97F4A7C15 mod 2**64)``, so a stream is fully
described by ``(seed, counter)``. The same arithmetic is implemented twice:
once with Python integers (``splitmix64``) and once as numba-compiled
helpers used inside the hot loops. Both produce identical streams on every
platform.

Uniform indices use rejection on the low ``2**64 mod t`` outputs followed by
``x mod t``, which is exactly uniform over ``{0, ..., t-1}``.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .errors import EmptyPoolError

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

GOLDEN = np.uint64(_GOLDEN)
M1 = np.uint64(_M1)
M2 = np.uint64(_M2)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_TWO_M53 = 1.0 / 9007199254740992.0


def splitmix64(seed: int, counter: int) -> int:
    """Return output number ``counter`` (1-based) of the stream ``seed``."""
    z = (seed + counter * _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * _M1) & _MASK
    z = ((z ^ (z >> 27)) * _M2) & _MASK
    return z ^ (z >> 31)


@njit(cache=True)
def mix64(z):
    z = (z ^ (z >> _S30)) * M1
    z = (z ^ (z >> _S27)) * M2
    return z ^ (z >> _S31)


@njit(cache=True)
def next_u64(seed, counter):
    """Advance the stream by one output; returns ``(value, counter)``."""
    counter += 1
    return mix64(seed + np.uint64(counter) * GOLDEN), counter


@njit(cache=True)
def uniform_index(seed, counter, t):
    """Uniform draw from ``{0, ..., t-1}``; returns ``(index, counter)``."""
    tt = np.uint64(t)
    threshold = (np.uint64(0) - tt) % tt
    while True:
        counter += 1
        x = mix64(seed + np.uint64(counter) * GOLDEN)
        if x >= threshold:
            return np.int64(x % tt), counter


@njit(cache=True)
def uniform_float(seed, counter):
    """Uniform double in ``[0, 1)`` from the top 53 bits of one output."""
    counter += 1
    x = mix64(seed + np.uint64(counter) * GOLDEN)
    return np.float64(x >> _S11) * _TWO_M53, counter


@njit(cache=True)
def _draw_many(seed, counter, t, out):
    for k in range(out.shape[0]):
        out[k], counter = uniform_index(seed, counter, t)
    return counter


class RngHandle:
    """Single-owner handle on one SplitMix64 stream.

    ``counter`` is the number of 64-bit outputs consumed so far. Two handles
    with the same seed and counter produce the same future stream.
    """

    __slots__ = ("seed", "counter")

    def __init__(self, seed: int, counter: int = 0):
        if not 0 <= int(seed) <= _MASK:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        self.seed = int(seed)
        self.counter = int(counter)

    def __repr__(self):
        return f"RngHandle(seed={self.seed}, counter={self.counter})"

    def copy(self) -> "RngHandle":
        return RngHandle(self.seed, self.counter)

    @property
    def seed_u64(self):
        return np.uint64(self.seed)

    def next_u64(self) -> int:
        self.counter += 1
        return splitmix64(self.seed, self.counter)

    def draw_indices(self, t: int, size: int) -> np.ndarray:
        """Draw ``size`` 0-based uniform indices over ``{0, ..., t-1}``."""
        if t < 1:
            raise EmptyPoolError("cannot draw from an empty pool (t = 0)")
        out = np.empty(size, dtype=np.int64)
        self.counter = int(_draw_many(self.seed_u64, self.counter, t, out))
        return out

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * _TWO_M53


def draw_index(rng: RngHandle, t: int) -> int:
    """Uniform index over ``{1, ..., t}`` (1-based, matching sample labels)."""
    if t < 1:
        raise EmptyPoolError("cannot draw from an empty pool (t = 0)")
    threshold = (1 << 64) % t
    while True:
        x = rng.next_u64()
        if x >= threshold:
            return x % t + 1


@njit(cache=True)
def _uniform_many(seed, counter, out):
    for k in range(out.shape[0]):
        out[k], counter = uniform_float(seed, counter)
    return counter


def uniforms(rng: RngHandle, size: int) -> np.ndarray:
    """``size`` uniform doubles in ``[0, 1)``; same stream as repeated ``rng.uniform()``."""
    out = np.empty(size, dtype=np.float64)
    rng.counter = int(_uniform_many(rng.seed_u64, rng.counter, out))
    return out

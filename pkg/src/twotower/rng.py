"""Deterministic counter-based random numbers.

Every draw is a pure function of a 64-bit key and a raw counter, so
substreams derived for (iteration, worker, sign, ...) can be evaluated in
any order, on any worker, with identical results.  The raw generator is the
splitmix64 output function applied to ``key + (counter + 1) * GOLDEN``;
Gaussian draws use the Box-Muller cosine branch and consume two raw values
each.  The compiled kernels replicate the exact same arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

_U64 = np.uint64
_INV53 = 1.0 / (1 << 53)
_TWO_PI = 2.0 * math.pi


def mix64(z: int) -> int:
    """splitmix64 finalizer (64-bit avalanche bijection)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive(key: int, *tags: int) -> int:
    """Derive an independent substream key from ``key`` and integer tags.

    Deterministic in its arguments and order-free with respect to when the
    substream is later consumed.
    """
    h = int(key) & MASK64
    for t in tags:
        h = mix64(h ^ mix64((int(t) + GOLDEN) & MASK64))
    return h


def raw_at(key: int, counter: int) -> int:
    return mix64((int(key) + (int(counter) + 1) * GOLDEN) & MASK64)


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = z.astype(np.uint64, copy=True)
    z ^= z >> _U64(30)
    z *= _U64(0xBF58476D1CE4E5B9)
    z ^= z >> _U64(27)
    z *= _U64(0x94D049BB133111EB)
    z ^= z >> _U64(31)
    return z


def raw_array(key: int, counters: np.ndarray) -> np.ndarray:
    """Raw 64-bit outputs at the given counters (vectorized, wrapping)."""
    c = counters.astype(np.uint64, copy=False)
    z = _U64(int(key) & MASK64) + (c + _U64(1)) * _U64(GOLDEN)
    return _mix_array(z)


def uniforms(key: int, start: int, n: int) -> np.ndarray:
    """n doubles in [0, 1), one raw value each, at counters start..start+n-1."""
    if n == 0:
        return np.empty(0)
    ctr = np.arange(int(start), int(start) + int(n), dtype=np.uint64)
    return (raw_array(key, ctr) >> _U64(11)).astype(np.float64) * _INV53


def normals(key: int, start: int, n: int) -> np.ndarray:
    """n standard normal draws; draw i consumes raw counters start+2i, start+2i+1.

    Box-Muller cosine branch: u1 in (0, 1] feeds the log, u2 the angle.
    """
    if n == 0:
        return np.empty(0)
    base = np.arange(0, 2 * int(n), 2, dtype=np.uint64) + _U64(int(start))
    r1 = raw_array(key, base)
    r2 = raw_array(key, base + _U64(1))
    u1 = ((r1 >> _U64(11)).astype(np.float64) + 1.0) * _INV53
    u2 = (r2 >> _U64(11)).astype(np.float64) * _INV53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)


@dataclass
class Rng:
    """A (key, counter) cursor over the deterministic stream.

    Cheap to copy; ``split`` returns an independent substream whose draws do
    not depend on how much of the parent stream was consumed.
    """

    key: int
    counter: int = 0

    @classmethod
    def from_seed(cls, seed: int, *tags: int) -> "Rng":
        return cls(derive(seed, *tags))

    def split(self, *tags: int) -> "Rng":
        return Rng(derive(self.key, *tags))

    def uniforms(self, n: int) -> np.ndarray:
        out = uniforms(self.key, self.counter, n)
        self.counter += int(n)
        return out

    def uniform(self) -> float:
        return float(self.uniforms(1)[0])

    def normals(self, n: int) -> np.ndarray:
        out = normals(self.key, self.counter, n)
        self.counter += 2 * int(n)
        return out

    def normal(self) -> float:
        return float(self.normals(1)[0])

    def randint_below(self, bound: int) -> int:
        """Integer in [0, bound) from one uniform draw (bound >= 1)."""
        if bound < 1:
            raise ValueError("bound must be >= 1")
        return min(int(self.uniform() * bound), bound - 1)

    def shuffled(self, n: int) -> np.ndarray:
        """Fisher-Yates permutation of arange(n)."""
        perm = np.arange(n)
        for i in range(n - 1, 0, -1):
            j = self.randint_below(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return perm

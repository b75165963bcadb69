"""Seeded random number streams with reproducible, documented semantics.

The generator is xoshiro256++ (Blackman & Vigna), seeded through splitmix64.
Both algorithms are public domain and fully specified, so any sequence drawn
here can be reproduced from the integer seed alone, independently of numpy
version or platform.

Streams are splittable: ``child(tag)`` derives an independent stream whose
seed depends only on the parent's seed and the tag, never on how many draws
the parent has made.  All bulk samplers consume the underlying u64 sequence
in a fixed documented order, which is what makes file outputs byte-stable.
"""

from __future__ import annotations

import math

import numpy as np

_MASK64 = (1 << 64) - 1
_UNIT = 2.0 ** -53


def _splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state, returning (new_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def _fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h = ((h ^ b) * 0x100000001B3) & _MASK64
    return h


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Stream:
    """A single xoshiro256++ stream plus derived sampling helpers."""

    __slots__ = ("seed", "_s0", "_s1", "_s2", "_s3", "_gauss")

    def __init__(self, seed: int):
        self.seed = seed & _MASK64
        state = self.seed
        state, self._s0 = _splitmix64(state)
        state, self._s1 = _splitmix64(state)
        state, self._s2 = _splitmix64(state)
        state, self._s3 = _splitmix64(state)
        self._gauss: float | None = None

    def child(self, tag: str | int) -> "Stream":
        """Derive an independent stream from this stream's seed and a tag.

        The derivation uses only the seed, so children are stable no matter
        how many values the parent has already produced.
        """
        return Stream(self.child_seed(tag))

    def child_seed(self, tag: str | int) -> int:
        _, mixed = _splitmix64(self.seed ^ _fnv1a64(str(tag).encode("utf-8")))
        return mixed

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s0, self._s1, self._s2, self._s3
        out = (_rotl((s0 + s3) & _MASK64, 23) + s0) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s0, self._s1, self._s2, self._s3 = s0, s1, s2, s3
        return out

    def random_unit(self) -> float:
        """One float64 in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * _UNIT

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random_unit()

    def normal(self, mean: float = 0.0, std: float = 1.0) -> float:
        """Standard Box-Muller; the second value of each pair is cached."""
        if self._gauss is not None:
            g, self._gauss = self._gauss, None
            return mean + std * g
        u1 = 1.0 - self.random_unit()  # in (0, 1], keeps log finite
        u2 = self.random_unit()
        r = math.sqrt(-2.0 * math.log(u1))
        self._gauss = r * math.sin(2.0 * math.pi * u2)
        return mean + std * r * math.cos(2.0 * math.pi * u2)

    def truncated_normal(self, lo: float, hi: float) -> float:
        """Standard normal conditioned on [lo, hi], by rejection."""
        while True:
            g = self.normal()
            if lo <= g <= hi:
                return g

    def units(self, n: int) -> np.ndarray:
        """n floats in [0, 1) as a float64 array, in draw order."""
        raw = np.fromiter((self.next_u64() for _ in range(n)), np.uint64, n)
        return (raw >> np.uint64(11)).astype(np.float64) * _UNIT

    def fill_uniform(self, shape: tuple[int, ...], lo: float, hi: float) -> np.ndarray:
        n = int(np.prod(shape)) if shape else 1
        return (lo + (hi - lo) * self.units(n)).reshape(shape).astype(np.float32)

    def fill_normal(self, shape: tuple[int, ...], mean: float = 0.0, std: float = 1.0) -> np.ndarray:
        """Box-Muller pairs, interleaved (cos, sin), trimmed to size."""
        n = int(np.prod(shape)) if shape else 1
        m = (n + 1) // 2
        u1 = 1.0 - self.units(m)
        u2 = self.units(m)
        r = np.sqrt(-2.0 * np.log(u1))
        out = np.empty(2 * m, dtype=np.float64)
        out[0::2] = r * np.cos(2.0 * np.pi * u2)
        out[1::2] = r * np.sin(2.0 * np.pi * u2)
        return (mean + std * out[:n]).reshape(shape).astype(np.float32)

    def latents(self, intervals: np.ndarray, distribution: str, count: int) -> np.ndarray:
        """Sample latent vectors, one row per vector, coordinates in order.

        ``uniform`` draws each coordinate uniformly over its interval.
        ``truncated_normal`` draws a standard normal conditioned on the
        coordinate's interval, coordinate-major within each vector.
        """
        intervals = np.asarray(intervals, dtype=np.float64)
        k = intervals.shape[0]
        if distribution == "uniform":
            u = self.units(count * k).reshape(count, k)
            lo = intervals[:, 0]
            hi = intervals[:, 1]
            return (lo + (hi - lo) * u).astype(np.float32)
        if distribution == "truncated_normal":
            out = np.empty((count, k), dtype=np.float64)
            for i in range(count):
                for j in range(k):
                    out[i, j] = self.truncated_normal(intervals[j, 0], intervals[j, 1])
            return out.astype(np.float32)
        raise ValueError(f"unknown latent distribution: {distribution!r}")

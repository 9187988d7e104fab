"""Seedable, splittable pseudo-random generator with a pinned algorithm.

Traces must be reproducible bit-exactly across runs, platforms, and across
the compiled/pure backends, so the generator is fully specified here instead
of delegating to library defaults:

- Stream: PCG32 (XSH-RR 64/32), Melissa O'Neill's reference constants.
  state' = state * 6364136223846793005 + inc  (mod 2^64, inc odd)
  output = rotr32(((state >> 18) ^ state) >> 27, state >> 59)
- Seeding: a 64-bit key is expanded with the SplitMix64 finalizer;
  outputs 0 and 1 of the key's SplitMix64 stream become PCG32's
  (initstate, initseq).
- Splitting: child i of a key reuses the same SplitMix64 stream at
  offset 2 + i, so child keys never collide with the parent's seeding
  material and splitting is independent of how many values were drawn.
- Floats: random() builds a 53-bit mantissa from two 32-bit outputs,
  ((a >> 5) * 2^26 + (b >> 6)) * 2^-53, uniform on [0, 1).

The compiled kernel re-implements exactly this arithmetic; equality of the
two streams is asserted by the test suite.
"""

from __future__ import annotations

from typing import Sequence

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_PCG_MULT = 6364136223846793005


def _mix64(z: int) -> int:
    z &= _MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK64
    z ^= z >> 31
    return z


def _stream(key: int, index: int) -> int:
    """Output ``index`` of the SplitMix64 stream seeded with ``key``."""
    return _mix64((key + (index + 1) * _GAMMA) & _MASK64)


def split_seed(seed: int, index: int) -> int:
    """Derive the key of child ``index`` of ``seed`` (what Rng.split uses)."""
    return _stream(seed & _MASK64, 2 + index)


class Rng:
    """PCG32 stream identified by a 64-bit key; see module docstring."""

    __slots__ = ("_key", "_state", "_inc")

    def __init__(self, seed: int):
        self._key = seed & _MASK64
        initstate = _stream(self._key, 0)
        initseq = _stream(self._key, 1)
        self._inc = ((initseq << 1) | 1) & _MASK64
        self._state = self._inc  # reference srandom: step from state 0
        self._state = (self._state + initstate) & _MASK64
        self._state = (self._state * _PCG_MULT + self._inc) & _MASK64

    @property
    def key(self) -> int:
        return self._key

    def next_u32(self) -> int:
        old = self._state
        self._state = (old * _PCG_MULT + self._inc) & _MASK64
        xorshifted = (((old >> 18) ^ old) >> 27) & 0xFFFFFFFF
        rot = old >> 59
        return ((xorshifted >> rot) | (xorshifted << ((-rot) & 31))) & 0xFFFFFFFF

    def random(self) -> float:
        """Uniform float64 on [0, 1) with 53 random bits."""
        a = self.next_u32() >> 5
        b = self.next_u32() >> 6
        return (a * 67108864.0 + b) * (1.0 / 9007199254740992.0)

    def choose(self, weights: Sequence[float]) -> int:
        """Inverse-CDF draw over ``weights`` in their given order.

        Consumes exactly one random(); weights must sum to ~1. Ties and
        rounding fall through to the last index.
        """
        u = self.random()
        acc = 0.0
        for i, w in enumerate(weights):
            acc += w
            if u < acc:
                return i
        return len(weights) - 1

    def split(self, index: int) -> "Rng":
        """Independent child stream ``index``; does not consume draws."""
        return Rng(_stream(self._key, 2 + index))

    def __repr__(self) -> str:
        return f"Rng(key=0x{self._key:016x})"

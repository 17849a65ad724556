"""Deterministic pseudo-randomness for everything that must replay bit-for-bit.

The generator is SplitMix64 (Steele, Lea & Flood, "Fast Splittable
Pseudorandom Number Generators", OOPSLA 2014 — the java.util.SplittableRandom
finalizer).  It was picked over library RNGs because the whole algorithm is a
handful of 64-bit integer operations with published constants and published
reference outputs (seed 0 -> 0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, ...), so
any implementation in any language reproduces the same stream.  Codebook
shuffles and injected noise are derived from these streams and compressed
output depends on them, which makes this generator part of the file format:
do not replace it with a generator whose internals may drift across library
versions.

Instances are explicit values passed to whoever needs randomness; nothing in
this package reads global RNG state.
"""

from __future__ import annotations

from typing import MutableSequence, TypeVar

import numpy as np

__all__ = ["SplitMix64", "mix64"]

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15

T = TypeVar("T")


def mix64(z: int) -> int:
    """The SplitMix64 output mixer: a 64-bit finalizer with good avalanche.

    Useful on its own for turning structured integers (seeds combined with
    counters, hashed contexts) into decorrelated 64-bit values.
    """
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """SplitMix64 stream: state += golden gamma, output = mix64(state)."""

    __slots__ = ("_state",)

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        return mix64(self._state)

    def next_below(self, n: int) -> int:
        """Integer in [0, n).  Plain modulo: the (< 2**-40 for our n) bias is
        irrelevant here; what matters is that the rule is fixed and portable."""
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_u64() % n

    def uniform01(self) -> float:
        """Double in [0, 1) with 53 random bits (the standard >> 11 ladder)."""
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform(self, lo: float, hi: float) -> float:
        """Double in [lo, hi); IEEE rounding keeps the result within bounds."""
        return lo + (hi - lo) * self.uniform01()

    def shuffle(self, seq: MutableSequence[T]) -> None:
        """In-place Fisher-Yates, high index down, j = next_u64() mod (i+1).

        This exact order is normative for codebook construction.
        """
        for i in range(len(seq) - 1, 0, -1):
            j = self.next_u64() % (i + 1)
            seq[i], seq[j] = seq[j], seq[i]

    def uniform_vector(self, n: int, lo: float, hi: float) -> np.ndarray:
        """n doubles, bit-identical to n successive uniform(lo, hi) calls.

        Vectorized: output i is mix64(state + (i+1)*gamma), which is exactly
        the sequential stream, computed with wrapping uint64 numpy ops.
        """
        steps = np.arange(1, n + 1, dtype=np.uint64) * np.uint64(_GAMMA)
        z = np.uint64(self._state) + steps  # wraps mod 2**64 like the scalar path
        self._state = (self._state + n * _GAMMA) & _MASK64
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
        u = (z >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return lo + (hi - lo) * u

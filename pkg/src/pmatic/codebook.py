"""Token <-> fixed-length codeword dictionary and conditional bit probabilities.

Every token gets a distinct ell-bit codeword, ell = ceil(log2(alphabet_size)),
drawn by a seeded shuffle of [0, 2**ell).  Codewords that remain unused (for
non-power-of-two alphabets) carry zero probability mass and never participate
in conditioning.

Conditioning works on the codeword-sorted order: the set of codewords that
extend a given bit prefix is a contiguous codeword range, so with one
cumulative-sum pass per probability vector every "P(next bit = 1 | prefix)"
query is two binary searches and a subtraction.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import AlphabetTooSmall, DomainError, EmptyPrefixSet, InternalInconsistency, UnknownToken
from .rng import SplitMix64

__all__ = [
    "Codebook",
    "build_codebook",
    "codeword_length",
    "token_bits",
    "conditional_bit_prob",
    "PrefixMassTable",
]

def codeword_length(alphabet_size: int) -> int:
    """ell = ceil(log2(alphabet_size)); e.g. 128256 -> 17, 4 -> 2."""
    if alphabet_size < 2:
        raise AlphabetTooSmall(f"alphabet_size must be >= 2, got {alphabet_size}")
    return (alphabet_size - 1).bit_length()

@dataclass(frozen=True)
class Codebook:
    """Immutable bijection token id <-> ell-bit codeword.

    codewords[t] is token t's codeword value; sorted_tokens/sorted_codes hold
    the same pairs ordered by codeword value (the order conditioning uses).
    """

    alphabet_size: int
    seed: int
    ell: int
    codewords: Tuple[int, ...]
    sorted_codes: Tuple[int, ...] = field(repr=False)
    sorted_tokens: Tuple[int, ...] = field(repr=False)

    def __post_init__(self) -> None:
        if self.alphabet_size < 2:
            raise AlphabetTooSmall(f"alphabet_size must be >= 2, got {self.alphabet_size}")
        if self.ell != codeword_length(self.alphabet_size):
            raise DomainError("ell inconsistent with alphabet_size")
        if len(self.codewords) != self.alphabet_size:
            raise DomainError("need exactly one codeword per token")
        if len(set(self.codewords)) != self.alphabet_size:
            raise DomainError("codewords must be distinct")
        if not all(0 <= c < (1 << self.ell) for c in self.codewords):
            raise DomainError("codeword out of range for ell bits")

    @classmethod
    def from_codewords(cls, codewords: Sequence[int], seed: int = 0) -> "Codebook":
        """Build from an explicit codeword list (tests, fixed layouts)."""
        n = len(codewords)
        ell = codeword_length(n)
        order = sorted(range(n), key=lambda t: codewords[t])
        return cls(
            alphabet_size=n,
            seed=seed,
            ell=ell,
            codewords=tuple(codewords),
            sorted_codes=tuple(codewords[t] for t in order),
            sorted_tokens=tuple(order),
        )

    def token_for_codeword(self, code: int) -> Optional[int]:
        """Token owning `code`, or None if the codeword is unused."""
        i = bisect_left(self.sorted_codes, code)
        if i < len(self.sorted_codes) and self.sorted_codes[i] == code:
            return self.sorted_tokens[i]
        return None

def build_codebook(alphabet_size: int, seed: int) -> Codebook:
    """Seeded Fisher-Yates shuffle of [0, 2**ell), truncated to alphabet_size.

    The shuffle order (see SplitMix64.shuffle) is normative: the same
    (alphabet_size, seed) pair reproduces the identical codebook everywhere,
    which is why containers only store these two numbers.
    """
    ell = codeword_length(alphabet_size)
    space: List[int] = list(range(1 << ell))
    SplitMix64(seed).shuffle(space)
    return Codebook.from_codewords(space[:alphabet_size], seed=seed)

def token_bits(cb: Codebook, token: int) -> Tuple[int, ...]:
    """Token's codeword as ell bits, most significant first."""
    if not 0 <= token < cb.alphabet_size:
        raise UnknownToken(f"token {token} outside [0, {cb.alphabet_size})")
    code = cb.codewords[token]
    return tuple((code >> (cb.ell - 1 - j)) & 1 for j in range(cb.ell))

class PrefixMassTable:
    """Per-token-step view of one probability vector in codeword order.

    Built once per predictor output (O(|A|)); each conditional-bit query is
    O(log |A|).  Probabilities are plain floats — encoder and decoder each
    build their own table from their own prediction, and only the quantized
    values downstream must agree.
    """

    __slots__ = ("cb", "_cum")

    def __init__(self, cb: Codebook, probs: Sequence[float]) -> None:
        arr = np.asarray(probs, dtype=np.float64)
        if arr.shape != (cb.alphabet_size,):
            raise DomainError(
                f"probability vector length {arr.shape} != alphabet {cb.alphabet_size}"
            )
        self.cb = cb
        ordered = arr[np.fromiter(cb.sorted_tokens, dtype=np.intp, count=cb.alphabet_size)]
        cum = np.empty(cb.alphabet_size + 1, dtype=np.float64)
        cum[0] = 0.0
        np.cumsum(ordered, out=cum[1:])
        self._cum = cum

    def _idx(self, code: int, lo: int = 0) -> int:
        return bisect_left(self.cb.sorted_codes, code, lo)

    def bit_prob(self, prefix_value: int, prefix_len: int) -> float:
        """P(bit at position prefix_len is 1 | codeword starts with prefix).

        Exactly 0.0 or 1.0 when the inhabited codewords all continue the same
        way; EmptyPrefixSet when no token's codeword extends the prefix.
        """
        ell = self.cb.ell
        if not 0 <= prefix_len < ell:
            raise DomainError(f"prefix length {prefix_len} outside [0, {ell})")
        shift = ell - prefix_len
        lo_code = prefix_value << shift
        i_lo = self._idx(lo_code)
        i_hi = self._idx(lo_code + (1 << shift), i_lo)
        if i_hi == i_lo:
            raise EmptyPrefixSet(f"no codeword extends prefix {prefix_value:b}/{prefix_len}")
        i_mid = self._idx(lo_code + (1 << (shift - 1)), i_lo)
        if i_mid == i_lo:
            return 1.0
        if i_mid == i_hi:
            return 0.0
        cum = self._cum
        den = cum[i_hi] - cum[i_lo]
        num = cum[i_hi] - cum[i_mid]
        if not den > 0.0:
            raise InternalInconsistency("inhabited prefix with nonpositive mass")
        return float(num / den)

    def count_in_prefix(self, prefix_value: int, prefix_len: int) -> int:
        """How many tokens extend the prefix (codebook structure only)."""
        shift = self.cb.ell - prefix_len
        lo_code = prefix_value << shift
        i_lo = self._idx(lo_code)
        return self._idx(lo_code + (1 << shift), i_lo) - i_lo

def conditional_bit_prob(cb: Codebook, probs: Sequence[float], prefix: Sequence[int]) -> float:
    """One-shot form of PrefixMassTable.bit_prob for a bit-sequence prefix."""
    value = 0
    for b in prefix:
        if b not in (0, 1):
            raise DomainError(f"prefix bits must be 0/1, got {b!r}")
        value = (value << 1) | b
    return PrefixMassTable(cb, probs).bit_prob(value, len(prefix))

"""Integer-only binary range coder: the bit-exact substrate under everything.

Normative coding rules (independent implementations must match these to
interoperate; see also the container notes in the README):

- State: ``low`` in [0, 2**64), ``range`` in (0, 2**64]; initially low = 0,
  range = 2**64.
- For an event with P(bit = 1) = num/den (0 < num < den <= 2**24):
  ``split = (range * num) // den`` (truncating integer division);
  bit 1 takes [low, low + split), bit 0 takes [low + split, low + range).
- Renormalization: while range < 2**32, emit the top byte (low >> 56),
  then low = (low << 8) mod 2**64 and range <<= 8.
- Carries from ``low + split`` wrapping past 2**64 propagate into the bytes
  already emitted (increment the last byte, rippling through 0xFF bytes).
- finish() appends the 8 bytes of the final ``low``, most significant first
  (the code point is the exact lower end of the final interval), so output
  length is at most the ideal code length plus 8 bytes.

The decoder mirrors the same arithmetic; after every step its (low, range)
pair equals the encoder's (the lockstep tests rely on this).  No floating
point exists anywhere in this module.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import DenominatorCapExceeded, DomainError, InputExhausted, InternalInconsistency

__all__ = ["BinaryProb", "RangeEncoder", "RangeDecoder", "PROB_DEN_CAP"]

_MASK64 = (1 << 64) - 1
_TOP = 1 << 32
PROB_DEN_CAP = 1 << 24


@dataclass(frozen=True)
class BinaryProb:
    """Exact probability num/den that a coded bit equals 1.

    These are the only probabilities that must match bit-exactly between
    encoder and decoder; 0 < num < den <= 2**24 keeps both branches of every
    split nonempty.
    """

    num: int
    den: int

    def __post_init__(self) -> None:
        if self.den > PROB_DEN_CAP:
            raise DenominatorCapExceeded(f"den {self.den} exceeds {PROB_DEN_CAP}")
        if not 0 < self.num < self.den:
            raise DomainError(f"need 0 < num < den, got {self.num}/{self.den}")

    @classmethod
    def from_fraction(cls, value: Fraction) -> "BinaryProb":
        return cls(value.numerator, value.denominator)

    @classmethod
    def from_float(cls, p: float) -> "BinaryProb":
        """Nearest num/2**24, clamped away from the degenerate ends.

        This is the plain-arithmetic-coding approximation path; the quantized
        codec never uses it.
        """
        num = round(p * PROB_DEN_CAP)
        num = min(max(num, 1), PROB_DEN_CAP - 1)
        return cls(num, PROB_DEN_CAP)


class RangeEncoder:
    """Single-owner encoder stream; call encode_bit repeatedly, then finish()."""

    __slots__ = ("low", "range_", "_out", "_finished", "carries")

    def __init__(self) -> None:
        self.low = 0
        self.range_ = 1 << 64
        self._out = bytearray()
        self._finished = False
        self.carries = 0  # exposed for tests exercising the carry path

    def encode_bit(self, bit: int, prob_one: BinaryProb) -> None:
        if self._finished:
            raise DomainError("encoder already finished")
        split = (self.range_ * prob_one.num) // prob_one.den
        # den <= 2**24 <= range guarantees 1 <= split < range: both branches live.
        if bit:
            self.range_ = split
        else:
            self.low += split
            self.range_ -= split
            if self.low > _MASK64:
                self._propagate_carry()
                self.low &= _MASK64
        while self.range_ < _TOP:
            self._out.append((self.low >> 56) & 0xFF)
            self.low = (self.low << 8) & _MASK64
            self.range_ <<= 8

    def _propagate_carry(self) -> None:
        self.carries += 1
        out = self._out
        i = len(out) - 1
        while i >= 0 and out[i] == 0xFF:
            out[i] = 0
            i -= 1
        if i < 0:
            # Would mean the code point reached 1.0 — impossible for nested
            # subintervals of [0, 1).
            raise InternalInconsistency("carry ran past the start of the output")
        out[i] += 1

    def finish(self) -> bytes:
        if not self._finished:
            self._finished = True
            for shift in range(56, -8, -8):
                self._out.append((self.low >> shift) & 0xFF)
        return bytes(self._out)

    @property
    def bytes_emitted(self) -> int:
        return len(self._out)


class RangeDecoder:
    """Mirror of RangeEncoder over a finished byte stream."""

    __slots__ = ("low", "range_", "code", "_data", "_pos")

    def __init__(self, data: bytes) -> None:
        self._data = data
        self._pos = 0
        self.low = 0
        self.range_ = 1 << 64
        self.code = 0
        for _ in range(8):
            self.code = (self.code << 8) | self._next_byte()

    def _next_byte(self) -> int:
        if self._pos >= len(self._data):
            raise InputExhausted(f"payload ended at byte {self._pos}")
        b = self._data[self._pos]
        self._pos += 1
        return b

    def decode_bit(self, prob_one: BinaryProb) -> int:
        split = (self.range_ * prob_one.num) // prob_one.den
        offset = (self.code - self.low) & _MASK64
        if offset < split:
            bit = 1
            self.range_ = split
        else:
            bit = 0
            self.low = (self.low + split) & _MASK64
            self.range_ -= split
        while self.range_ < _TOP:
            self.code = ((self.code << 8) & _MASK64) | self._next_byte()
            self.low = (self.low << 8) & _MASK64
            self.range_ <<= 8
        return bit

    @property
    def bytes_consumed(self) -> int:
        return self._pos

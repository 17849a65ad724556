"""Exact rational codec parameters and the closed-form analysis quantities.

Conventions
-----------
- All logarithms are base 2; every "bits" quantity below is in bits.
- The shared encoder/decoder contract (tolerance ``delta``, bin radius
  ``bin_radius``, bin count, helper probability) is exact rational arithmetic
  via ``fractions.Fraction``.  Analysis functions (entropy, KL, radius
  optimization) return floats; their outputs never feed the bit-exact coding
  path.

The probability axis [0, 1] is tiled by ``m`` closed bins of width ``2r``
(``r = 1/(2m)``), with centers ``(2k-1)/(2m)`` and interior boundaries
``k/m``.  A tolerance ``delta`` is valid only when ``r > 2*delta``, which also
forces the helper probability ``delta/r`` below 1/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .errors import (
    DenominatorCapExceeded,
    DomainError,
    HelperProbOutOfRange,
    NoRoot,
    NotReciprocalEvenInteger,
    RadiusTooSmall,
)

__all__ = [
    "Rational",
    "RationalLike",
    "PmaticParams",
    "new_params",
    "binary_entropy",
    "binary_kl",
    "LossBounds",
    "loss_bounds",
    "OptimalRadius",
    "optimal_r",
    "LOG2_E",
    "PROB_DENOMINATOR_CAP",
]

Rational = Fraction
RationalLike = Union[Fraction, int, str]

LOG2_E = math.log2(math.e)

# Probabilities handed to the range coder must have denominator <= 2**24;
# params are rejected up front rather than failing later inside the coder.
PROB_DENOMINATOR_CAP = 1 << 24


def _as_rational(value: RationalLike, name: str) -> Fraction:
    """Exact conversion; decimal strings like "0.001" parse with no rounding."""
    try:
        return Fraction(value)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise DomainError(f"{name} is not a rational: {value!r}") from exc


@dataclass(frozen=True)
class PmaticParams:
    """Validated codec parameters shared verbatim by encoder and decoder.

    delta       -- mismatch tolerance (probability units), exact.
    bin_radius  -- quantization bin radius r = 1/(2m), exact.
    bin_count   -- m, number of bins tiling [0, 1].
    helper_prob -- delta/r, the fixed coding probability of a set helper bit.
    """

    delta: Fraction
    bin_radius: Fraction
    bin_count: int
    helper_prob: Fraction

    def center(self, k: int) -> Fraction:
        """Center of bin k (1-based): (2k-1)/(2m)."""
        if not 1 <= k <= self.bin_count:
            raise DomainError(f"bin index {k} outside [1, {self.bin_count}]")
        return Fraction(2 * k - 1, 2 * self.bin_count)

    def boundary(self, k: int) -> Fraction:
        """Interior boundary k/m between bins k and k+1, k in [1, m-1]."""
        if not 1 <= k <= self.bin_count - 1:
            raise DomainError(f"boundary index {k} outside [1, {self.bin_count - 1}]")
        return Fraction(k, self.bin_count)

    def describe(self) -> str:
        return (
            f"delta={self.delta} r={self.bin_radius} m={self.bin_count} "
            f"helper_prob={self.helper_prob}"
        )


def new_params(delta: RationalLike, bin_radius: RationalLike) -> PmaticParams:
    """Validate (delta, r) and derive m = 1/(2r) and helper_prob = delta/r.

    Raises RadiusTooSmall when r <= 2*delta (checked first: it subsumes the
    helper-probability bound), NotReciprocalEvenInteger when 1/(2r) is not a
    positive integer, HelperProbOutOfRange when delta/r falls outside (0, 1/2)
    (unreachable once the radius check passed; kept as a guard), and
    DenominatorCapExceeded when either coded probability cannot be represented
    under the coder's 2**24 denominator cap.
    """
    d = _as_rational(delta, "delta")
    r = _as_rational(bin_radius, "bin_radius")
    if d <= 0:
        raise DomainError(f"delta must be positive, got {d}")
    if r <= 0:
        raise DomainError(f"bin_radius must be positive, got {r}")
    if r <= 2 * d:
        raise RadiusTooSmall(f"need bin_radius > 2*delta; got r={r}, 2*delta={2 * d}")
    inv = 1 / (2 * r)
    if inv.denominator != 1 or inv.numerator < 1:
        raise NotReciprocalEvenInteger(
            f"1/(2r) must be a positive integer; r={r} gives {float(inv):.6g}"
        )
    m = inv.numerator
    helper = d / r
    if not 0 < helper < Fraction(1, 2):
        raise HelperProbOutOfRange(f"delta/r = {helper} outside (0, 1/2)")
    if 2 * m > PROB_DENOMINATOR_CAP:
        raise DenominatorCapExceeded(
            f"bin denominator 2m = {2 * m} exceeds coder cap {PROB_DENOMINATOR_CAP}"
        )
    if helper.denominator > PROB_DENOMINATOR_CAP:
        raise DenominatorCapExceeded(
            f"helper probability denominator {helper.denominator} exceeds coder cap"
        )
    return PmaticParams(delta=d, bin_radius=r, bin_count=m, helper_prob=helper)


def binary_entropy(p: float) -> float:
    """h(p) = p*log2(1/p) + (1-p)*log2(1/(1-p)), the cost of a Bernoulli bit."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"binary_entropy needs p in (0,1), got {p}")
    return -(p * math.log2(p) + (1.0 - p) * math.log2(1.0 - p))


def binary_kl(p: float, q: float) -> float:
    """D(p||q) in bits for Bernoulli(p) vs Bernoulli(q); 0*log 0 = 0.

    p may sit on the boundary of [0,1]; q may not (the divergence would be
    infinite), hence DomainError for q outside (0,1).
    """
    p = float(p)
    q = float(q)
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"binary_kl needs p in [0,1], got {p}")
    if not 0.0 < q < 1.0:
        raise DomainError(f"binary_kl needs q in (0,1), got {q}")
    out = 0.0
    if p > 0.0:
        out += p * math.log2(p / q)
    if p < 1.0:
        out += (1.0 - p) * math.log2((1.0 - p) / (1.0 - q))
    return out


@dataclass(frozen=True)
class LossBounds:
    """Worst-case extra bits per *token bit* from the two overhead sources."""

    helper_bits_per_bit: float  # expected helper-bit cost: h(delta/r)
    quant_bits_per_bit: float   # quantization KL ceiling: 2*log2(e)*r


def loss_bounds(params: PmaticParams) -> LossBounds:
    return LossBounds(
        helper_bits_per_bit=binary_entropy(float(params.helper_prob)),
        quant_bits_per_bit=2.0 * LOG2_E * float(params.bin_radius),
    )


@dataclass(frozen=True)
class OptimalRadius:
    """Two estimates of the overhead-minimizing bin radius for a tolerance.

    balanced    -- numeric root of 2*log2(e)*r^2 = delta*log2(r/delta); this is
                   the authoritative recommendation.
    closed_form -- sqrt(delta*log2(1/delta)) / sqrt(2*log2(e)), the small-delta
                   approximation, reported for comparison.
    """

    balanced: float
    closed_form: float


def _balance_residual(r: float, delta: float) -> float:
    # quant term minus (dominant part of) helper term, both per token bit,
    # after multiplying through by r to avoid the 1/r pole.
    return 2.0 * LOG2_E * r * r - delta * math.log2(r / delta)


def optimal_r(delta: float) -> OptimalRadius:
    """Solve the overhead balance equation for r by bisection on (2*delta, 1/2).

    Bisection runs to absolute tolerance 1e-12; NoRoot if the residual does
    not change sign on the interval (happens for delta close to 1/8 where no
    admissible radius balances the two costs).
    """
    delta = float(delta)
    if not 0.0 < delta < 0.125:
        raise DomainError(f"optimal_r needs delta in (0, 1/8), got {delta}")
    closed = math.sqrt(delta * math.log2(1.0 / delta) / (2.0 * LOG2_E))

    lo = 2.0 * delta * (1.0 + 1e-9)  # just inside the admissible region
    hi = 0.5
    f_lo = _balance_residual(lo, delta)
    f_hi = _balance_residual(hi, delta)
    if f_lo == 0.0:
        return OptimalRadius(balanced=lo, closed_form=closed)
    if f_hi == 0.0:
        return OptimalRadius(balanced=hi, closed_form=closed)
    if (f_lo > 0.0) == (f_hi > 0.0):
        raise NoRoot(f"balance equation has no sign change on ({lo:.3g}, {hi})")
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        f_mid = _balance_residual(mid, delta)
        if f_mid == 0.0:
            return OptimalRadius(balanced=mid, closed_form=closed)
        if (f_mid > 0.0) == (f_lo > 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    return OptimalRadius(balanced=0.5 * (lo + hi), closed_form=closed)

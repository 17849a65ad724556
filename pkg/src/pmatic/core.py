"""The quantized helper-bit codec: classification, quantization, token loops.

Per token the encoder walks the token's codeword bits.  For each bit it
computes the conditional probability p of that bit being 1, then either

- p lies in the tolerance-interior of its quantization bin: emit helper bit 0
  and code the token bit at the *bin center*, or
- p lies strictly within delta of a bin boundary: emit helper bit 1 and code
  the token bit at that *boundary*.

The decoder recomputes its own conditional q from its own (possibly
mismatched) prediction; the decoded helper bit tells it whether to snap q to
a bin center or to the nearest boundary.  As long as every per-bit |p - q|
stays within delta, both sides land on the identical rational probability and
the range coder stays in lockstep — that agreement is the property the grid
and stream tests hammer on.

Interior membership uses closed intervals ([0, 2r-d], [2r(k-1)+d, 2rk-d],
[2r(m-1)+d, 1]); boundary proximity is strict (|k/m - p| < d).  Classification
compares the float p against rational thresholds exactly (floats are dyadic
rationals), so there is no threshold-rounding ambiguity within one machine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, NamedTuple, Optional, Sequence

from .codebook import Codebook, PrefixMassTable, build_codebook, token_bits
from .errors import (
    DomainError,
    EmptyPrefixSet,
    InternalInconsistency,
    TokenOutOfRange,
    UnknownCodeword,
)
from .params import PmaticParams, Rational
from .rangecoder import BinaryProb, RangeDecoder, RangeEncoder

__all__ = [
    "Quantization",
    "StreamConfig",
    "StreamStats",
    "classify_encoder",
    "quantize_decoder",
    "clamp_unit",
    "encode_token",
    "decode_token",
    "encode_stream",
    "decode_stream",
    "encode_stream_plain",
    "decode_stream_plain",
]

# One ulp into the open interval: degenerate conditionals (structurally 0 or
# 1) are clamped here so they classify into the first/last bin interior.  Both
# sides derive the degenerate value from codebook structure alone, so they
# clamp identically.
_P_MIN = math.nextafter(0.0, 1.0)
_P_MAX = math.nextafter(1.0, 0.0)


class Quantization(NamedTuple):
    """Encoder-side classification result.

    index is the bin index k in [1, m] when helper_bit = 0 (phat = (2k-1)/2m),
    or the boundary index k in [1, m-1] when helper_bit = 1 (phat = k/m).
    """

    helper_bit: int
    index: int
    phat: Rational


def clamp_unit(p: float) -> float:
    """Clamp into the open unit interval by one ulp; NaN is rejected."""
    if math.isnan(p):
        raise DomainError("probability is NaN")
    if p <= 0.0:
        return _P_MIN
    if p >= 1.0:
        return _P_MAX
    return p


@lru_cache(maxsize=1 << 16)
def _phat_fraction(m: int, helper_bit: int, index: int) -> Rational:
    if helper_bit:
        return Rational(index, m)
    return Rational(2 * index - 1, 2 * m)


@lru_cache(maxsize=1 << 16)
def _phat_prob(m: int, helper_bit: int, index: int) -> BinaryProb:
    return BinaryProb.from_fraction(_phat_fraction(m, helper_bit, index))


def _classify_indices(pn: int, pd: int, params: PmaticParams) -> "tuple[int, int]":
    """Exact-integer classification of p = pn/pd; returns (helper_bit, index)."""
    m = params.bin_count
    if m == 1:
        # Single bin covering [0, 1]: no interior boundaries exist, the
        # delta-interior is the whole bin.
        return 0, 1
    dn = params.delta.numerator
    dd = params.delta.denominator
    k = (pn * m) // pd + 1  # bin index: p in [(k-1)/m, k/m); p < 1 keeps k <= m
    lhs = pn * m * dd       # p scaled to the common denominator m*dd
    # Closed-interval interior test, with the first/last bins running to the
    # domain edges.
    if k == 1:
        interior = lhs <= pd * (dd - m * dn)
    elif k == m:
        interior = lhs >= pd * ((m - 1) * dd + m * dn)
    else:
        interior = (
            lhs >= pd * ((k - 1) * dd + m * dn) and lhs <= pd * (k * dd - m * dn)
        )
    if interior:
        return 0, k
    # Not interior: p must be strictly within delta of one of its bin's edges
    # (r > 2*delta makes "within delta of both" impossible).
    for j in (k - 1, k):
        if 1 <= j <= m - 1 and abs(j * pd - m * pn) * dd < m * pd * dn:
            return 1, j
    raise InternalInconsistency(
        f"p={pn}/{pd} neither interior nor boundary-adjacent under {params.describe()}"
    )


def classify_encoder(p: float, params: PmaticParams) -> Quantization:
    """Classify an encoder conditional probability; see the module docstring."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"classify_encoder needs p in (0,1), got {p}")
    pn, pd = p.as_integer_ratio()
    helper_bit, index = _classify_indices(pn, pd, params)
    return Quantization(helper_bit, index, _phat_fraction(params.bin_count, helper_bit, index))


def _quantize_indices(qn: int, qd: int, helper_bit: int, m: int) -> "tuple[int, int]":
    """Exact-integer decoder quantization of q = qn/qd; returns (helper, index)."""
    if m == 1:
        # Lone bin, no boundaries: return its center for either helper value
        # (a conforming encoder never emits helper 1 here).
        return 0, 1
    scaled = qn * m
    if helper_bit == 0:
        return 0, scaled // qd + 1  # half-open bins; q < 1 keeps k <= m
    j = scaled // qd
    rem = scaled - j * qd
    if 2 * rem > qd:  # strictly past the midpoint: round up; ties stay down
        j += 1
    return 1, min(max(j, 1), m - 1)


def quantize_decoder(q: float, helper_bit: int, params: PmaticParams) -> Rational:
    """Decoder-side quantization of its own conditional q.

    helper 0: center of the bin containing q, bins half-open on the right
    ([2r(k-1), 2rk)), last bin closed at 1.  helper 1: nearest boundary k/m
    over k in [1, m-1], exact ties toward smaller k.  Under the agreement
    premise (per-bit |p-q| <= delta with delta non-dyadic, so equality cannot
    occur between floats) these conventions always reproduce the encoder's
    value; at the measure-zero equality point of a dyadic delta they are still
    total, just arbitrary.
    """
    if not 0.0 < q < 1.0:
        raise DomainError(f"quantize_decoder needs q in (0,1), got {q}")
    if helper_bit not in (0, 1):
        raise DomainError(f"helper_bit must be 0 or 1, got {helper_bit}")
    qn, qd = q.as_integer_ratio()
    h, index = _quantize_indices(qn, qd, helper_bit, params.bin_count)
    return _phat_fraction(params.bin_count, h, index)


@dataclass(frozen=True)
class StreamConfig:
    """Everything encoder and decoder must share about a stream.

    context_max/context_keep implement the rolling-window policy: after each
    token is appended, a context that has reached max length is truncated to
    its most recent `keep` tokens.  Predictors always see the already
    truncated context.
    """

    params: PmaticParams
    alphabet_size: int
    codebook_seed: int = 0
    context_max: int = 512
    context_keep: int = 256
    predictor_id: str = "ngram:2"
    skip_structural_bits: bool = False

    def __post_init__(self) -> None:
        if self.alphabet_size < 2:
            raise DomainError(f"alphabet_size must be >= 2, got {self.alphabet_size}")
        if not 0 <= self.context_keep <= self.context_max:
            raise DomainError(
                f"need max_window >= keep >= 0, got {self.context_max}/{self.context_keep}"
            )

    def build_codebook(self) -> Codebook:
        return build_codebook(self.alphabet_size, self.codebook_seed)


@dataclass
class StreamStats:
    """Per-stream accounting (filled by the encoder when passed in).

    helper_cost_bits / token_cost_bits are the analytic information contents
    of the coded events (-log2 of each event's coding probability), so helper
    overhead can be attributed exactly even though the payload interleaves
    everything into one bitstream.
    """

    tokens: int = 0
    coded_events: int = 0
    helper_zero: int = 0
    helper_one: int = 0
    structural_skipped: int = 0
    helper_cost_bits: float = 0.0
    token_cost_bits: float = 0.0
    payload_bytes: int = 0

    def helper_cost_per_token(self) -> float:
        return self.helper_cost_bits / self.tokens if self.tokens else 0.0


def _forced_bit(table: PrefixMassTable, value: int, length: int) -> Optional[int]:
    """The structurally forced bit at this prefix, if only one child is
    inhabited (decided by codeword counts, identical on both sides)."""
    if table.count_in_prefix((value << 1) | 1, length + 1) == 0:
        return 0
    if table.count_in_prefix(value << 1, length + 1) == 0:
        return 1
    return None


def encode_token(
    token: int,
    context: Sequence[int],
    predictor,
    cb: Codebook,
    params: PmaticParams,
    coder: RangeEncoder,
    *,
    helper_prob: Optional[BinaryProb] = None,
    skip_structural: bool = False,
    stats: Optional[StreamStats] = None,
) -> RangeEncoder:
    """Encode one token: 2*ell coded events (helper + token bit per position),
    minus any structurally skipped positions when that option is on."""
    from .probmodel import softmax  # local import: core <-> probmodel layering

    if helper_prob is None:
        helper_prob = BinaryProb.from_fraction(params.helper_prob)
    table = PrefixMassTable(cb, softmax(predictor.predict(context)))
    bits = token_bits(cb, token)
    m = params.bin_count
    value = 0
    for j, bit in enumerate(bits):
        if skip_structural:
            forced = _forced_bit(table, value, j)
            if forced is not None:
                if forced != bit:
                    raise InternalInconsistency("token bit contradicts codebook structure")
                value = (value << 1) | bit
                if stats is not None:
                    stats.structural_skipped += 1
                continue
        p = clamp_unit(table.bit_prob(value, j))
        helper_bit, index = _classify_indices(*p.as_integer_ratio(), params)
        coder.encode_bit(helper_bit, helper_prob)
        prob = _phat_prob(m, helper_bit, index)
        coder.encode_bit(bit, prob)
        value = (value << 1) | bit
        if stats is not None:
            stats.coded_events += 2
            if helper_bit:
                stats.helper_one += 1
                stats.helper_cost_bits += math.log2(helper_prob.den / helper_prob.num)
            else:
                stats.helper_zero += 1
                stats.helper_cost_bits += math.log2(
                    helper_prob.den / (helper_prob.den - helper_prob.num)
                )
            branch = prob.num if bit else prob.den - prob.num
            stats.token_cost_bits += math.log2(prob.den / branch)
    return coder


def decode_token(
    context: Sequence[int],
    predictor,
    cb: Codebook,
    params: PmaticParams,
    coder: RangeDecoder,
    *,
    helper_prob: Optional[BinaryProb] = None,
    skip_structural: bool = False,
    bit_offset: Optional[Callable[[float], float]] = None,
) -> int:
    """Decode one token; the mirror of encode_token.

    bit_offset, when given, perturbs each conditional before quantization
    (the adversarial worst-case hook).
    """
    from .probmodel import softmax

    if helper_prob is None:
        helper_prob = BinaryProb.from_fraction(params.helper_prob)
    table = PrefixMassTable(cb, softmax(predictor.predict(context)))
    m = params.bin_count
    value = 0
    for j in range(cb.ell):
        if skip_structural:
            forced = _forced_bit(table, value, j)
            if forced is not None:
                value = (value << 1) | forced
                continue
        helper_bit = coder.decode_bit(helper_prob)
        try:
            q = table.bit_prob(value, j)
        except EmptyPrefixSet as exc:
            raise UnknownCodeword(
                f"decoded prefix {value:0{j}b} has no tokens (mismatch beyond tolerance?)"
            ) from exc
        q = clamp_unit(q)  # mirror the encoder before any perturbation
        if bit_offset is not None:
            q = clamp_unit(bit_offset(q))
        qn, qd = q.as_integer_ratio()
        h, index = _quantize_indices(qn, qd, helper_bit, m)
        bit = coder.decode_bit(_phat_prob(m, h, index))
        value = (value << 1) | bit
    token = cb.token_for_codeword(value)
    if token is None:
        raise UnknownCodeword(f"codeword {value:0{cb.ell}b} maps to no token")
    return token


def _advance_context(ctx: List[int], token: int, config: StreamConfig) -> None:
    ctx.append(token)
    if len(ctx) >= config.context_max:
        del ctx[: len(ctx) - config.context_keep]


def encode_stream(
    tokens: Sequence[int],
    predictor,
    config: StreamConfig,
    *,
    coder: Optional[RangeEncoder] = None,
    codebook: Optional[Codebook] = None,
    stats: Optional[StreamStats] = None,
) -> bytes:
    """Encode a whole token sequence into a range-coder payload."""
    cb = codebook if codebook is not None else config.build_codebook()
    if coder is None:
        coder = RangeEncoder()
    helper_prob = BinaryProb.from_fraction(config.params.helper_prob)
    ctx: List[int] = []
    for token in tokens:
        if not 0 <= token < config.alphabet_size:
            raise TokenOutOfRange(f"token {token} outside [0, {config.alphabet_size})")
        encode_token(
            token,
            ctx,
            predictor,
            cb,
            config.params,
            coder,
            helper_prob=helper_prob,
            skip_structural=config.skip_structural_bits,
            stats=stats,
        )
        predictor.update(ctx, token)
        _advance_context(ctx, token, config)
        if stats is not None:
            stats.tokens += 1
    payload = coder.finish()
    if stats is not None:
        stats.payload_bytes = len(payload)
    return payload


def decode_stream(
    payload: bytes,
    token_count: int,
    predictor,
    config: StreamConfig,
    *,
    codebook: Optional[Codebook] = None,
) -> List[int]:
    """Decode token_count tokens; the mirror of encode_stream.

    If the predictor exposes a `bit_probability_offset` attribute (the
    adversarial mismatch mode), it is applied to every conditional.
    """
    cb = codebook if codebook is not None else config.build_codebook()
    coder = RangeDecoder(payload)
    helper_prob = BinaryProb.from_fraction(config.params.helper_prob)
    bit_offset = getattr(predictor, "bit_probability_offset", None)
    ctx: List[int] = []
    out: List[int] = []
    for _ in range(token_count):
        token = decode_token(
            ctx,
            predictor,
            cb,
            config.params,
            coder,
            helper_prob=helper_prob,
            skip_structural=config.skip_structural_bits,
            bit_offset=bit_offset,
        )
        predictor.update(ctx, token)
        _advance_context(ctx, token, config)
        out.append(token)
    return out


def encode_stream_plain(
    tokens: Sequence[int],
    predictor,
    config: StreamConfig,
    *,
    codebook: Optional[Codebook] = None,
    stats: Optional[StreamStats] = None,
) -> bytes:
    """Baseline: straight arithmetic coding of the same bit stream, no helper
    bits, no quantization — conditionals rounded to 24-bit probabilities.
    This is the path that collapses under prediction mismatch."""
    from .probmodel import softmax

    cb = codebook if codebook is not None else config.build_codebook()
    coder = RangeEncoder()
    ctx: List[int] = []
    for token in tokens:
        if not 0 <= token < config.alphabet_size:
            raise TokenOutOfRange(f"token {token} outside [0, {config.alphabet_size})")
        table = PrefixMassTable(cb, softmax(predictor.predict(ctx)))
        value = 0
        for j, bit in enumerate(token_bits(cb, token)):
            prob = BinaryProb.from_float(clamp_unit(table.bit_prob(value, j)))
            coder.encode_bit(bit, prob)
            value = (value << 1) | bit
            if stats is not None:
                stats.coded_events += 1
                branch = prob.num if bit else prob.den - prob.num
                stats.token_cost_bits += math.log2(prob.den / branch)
        predictor.update(ctx, token)
        _advance_context(ctx, token, config)
        if stats is not None:
            stats.tokens += 1
    payload = coder.finish()
    if stats is not None:
        stats.payload_bytes = len(payload)
    return payload


def decode_stream_plain(
    payload: bytes,
    token_count: int,
    predictor,
    config: StreamConfig,
    *,
    codebook: Optional[Codebook] = None,
) -> List[int]:
    cb = codebook if codebook is not None else config.build_codebook()
    coder = RangeDecoder(payload)
    ctx: List[int] = []
    out: List[int] = []
    from .probmodel import softmax

    for _ in range(token_count):
        table = PrefixMassTable(cb, softmax(predictor.predict(ctx)))
        value = 0
        for j in range(cb.ell):
            try:
                q = table.bit_prob(value, j)
            except EmptyPrefixSet as exc:
                raise UnknownCodeword(
                    f"decoded prefix {value:0{j}b} has no tokens"
                ) from exc
            bit = coder.decode_bit(BinaryProb.from_float(clamp_unit(q)))
            value = (value << 1) | bit
        token = cb.token_for_codeword(value)
        if token is None:
            raise UnknownCodeword(f"codeword {value:0{cb.ell}b} maps to no token")
        out.append(token)
        predictor.update(ctx, token)
        _advance_context(ctx, token, config)
    return out

"""Self-describing container format and the bench harness.

Layout (all little-endian):

    magic          4 bytes  "PMTC"
    version        u8       currently 1
    alphabet_size  u32
    codebook_seed  u64
    delta_num      u64      delta as a reduced rational
    delta_den      u64
    m              u32      bin count; r is derived as 1/(2m), never stored
    predictor_id   u16 length + UTF-8 bytes
    context_max    u16
    context_keep   u16
    token_count    u64
    payload_length u64
    payload        payload_length bytes of range-coder output

Parsing re-runs full parameter validation, so a header whose (delta, m) give
r <= 2*delta is rejected before any payload byte is touched.  Bytes after
header + payload_length are ignored.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple

from .codebook import codeword_length
from .core import (
    StreamConfig,
    StreamStats,
    decode_stream,
    decode_stream_plain,
    encode_stream,
    encode_stream_plain,
)
from .errors import (
    BadMagic,
    BridgeError,
    DecodeError,
    DomainError,
    InputExhausted,
    UnsupportedVersion,
    VocabMismatch,
)
from .params import PmaticParams, Rational, new_params
from .predictors import (
    ExternalPredictor,
    MismatchWrapper,
    NGramPredictor,
    UniformPredictor,
)

__all__ = [
    "MAGIC",
    "VERSION",
    "ContainerHeader",
    "serialize_header",
    "parse_header",
    "compress",
    "decompress",
    "make_predictor",
    "BenchReport",
    "bench_stream",
    "chunk_bytes",
]

MAGIC = b"PMTC"
VERSION = 1

_FIXED_HEAD = struct.Struct("<4sBIQQQI")  # magic..m
_FIXED_TAIL = struct.Struct("<HHQQ")      # context_max..payload_length
_U16 = struct.Struct("<H")
_U64_MAX = (1 << 64) - 1


@dataclass(frozen=True)
class ContainerHeader:
    alphabet_size: int
    codebook_seed: int
    delta: Rational
    bin_count: int
    predictor_id: str
    context_max: int
    context_keep: int
    token_count: int
    payload_length: int
    version: int = VERSION

    def params(self) -> PmaticParams:
        """Reconstruct and re-validate the coding parameters."""
        return new_params(self.delta, Fraction(1, 2 * self.bin_count))

    def stream_config(self, skip_structural_bits: bool = False) -> StreamConfig:
        return StreamConfig(
            params=self.params(),
            alphabet_size=self.alphabet_size,
            codebook_seed=self.codebook_seed,
            context_max=self.context_max,
            context_keep=self.context_keep,
            predictor_id=self.predictor_id,
            skip_structural_bits=skip_structural_bits,
        )


def _header_from_config(config: StreamConfig, token_count: int,
                        payload_length: int) -> ContainerHeader:
    return ContainerHeader(
        alphabet_size=config.alphabet_size,
        codebook_seed=config.codebook_seed,
        delta=config.params.delta,
        bin_count=config.params.bin_count,
        predictor_id=config.predictor_id,
        context_max=config.context_max,
        context_keep=config.context_keep,
        token_count=token_count,
        payload_length=payload_length,
    )


def serialize_header(header: ContainerHeader) -> bytes:
    delta = Fraction(header.delta)
    if not (0 < delta.numerator <= _U64_MAX and delta.denominator <= _U64_MAX):
        raise DomainError(f"delta {delta} does not fit the 64-bit header fields")
    pid = header.predictor_id.encode("utf-8")
    if len(pid) > 0xFFFF:
        raise DomainError("predictor_id longer than 65535 bytes")
    for name, value, limit in (
        ("alphabet_size", header.alphabet_size, 0xFFFFFFFF),
        ("bin_count", header.bin_count, 0xFFFFFFFF),
        ("codebook_seed", header.codebook_seed, _U64_MAX),
        ("context_max", header.context_max, 0xFFFF),
        ("context_keep", header.context_keep, 0xFFFF),
        ("token_count", header.token_count, _U64_MAX),
        ("payload_length", header.payload_length, _U64_MAX),
    ):
        if not 0 <= value <= limit:
            raise DomainError(f"{name}={value} outside header field range")
    head = _FIXED_HEAD.pack(
        MAGIC,
        header.version,
        header.alphabet_size,
        header.codebook_seed,
        delta.numerator,
        delta.denominator,
        header.bin_count,
    )
    tail = _FIXED_TAIL.pack(
        header.context_max,
        header.context_keep,
        header.token_count,
        header.payload_length,
    )
    return head + _U16.pack(len(pid)) + pid + tail


def parse_header(data: bytes) -> Tuple[ContainerHeader, int]:
    """Parse and validate a header; returns (header, payload offset)."""
    if len(data) < _FIXED_HEAD.size:
        raise InputExhausted("container shorter than the fixed header")
    magic, version, alphabet, seed, dnum, dden, m = _FIXED_HEAD.unpack_from(data, 0)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}")
    if version != VERSION:
        raise UnsupportedVersion(f"container version {version}, supported: {VERSION}")
    off = _FIXED_HEAD.size
    if len(data) < off + _U16.size:
        raise InputExhausted("container truncated in predictor_id length")
    (pid_len,) = _U16.unpack_from(data, off)
    off += _U16.size
    if len(data) < off + pid_len + _FIXED_TAIL.size:
        raise InputExhausted("container truncated in predictor_id/tail")
    predictor_id = data[off:off + pid_len].decode("utf-8")
    off += pid_len
    ctx_max, ctx_keep, token_count, payload_length = _FIXED_TAIL.unpack_from(data, off)
    off += _FIXED_TAIL.size
    if dden == 0:
        raise DomainError("delta denominator 0 in header")
    header = ContainerHeader(
        alphabet_size=alphabet,
        codebook_seed=seed,
        delta=Fraction(dnum, dden),
        bin_count=m,
        predictor_id=predictor_id,
        context_max=ctx_max,
        context_keep=ctx_keep,
        token_count=token_count,
        payload_length=payload_length,
        version=version,
    )
    header.params()  # reject invalid (delta, m) combinations before any decode
    return header, off


def compress(tokens: Sequence[int], config: StreamConfig, predictor, *,
             stats: Optional[StreamStats] = None) -> bytes:
    """Serialize tokens into a container. The predictor is reset first, so a
    reused instance yields byte-identical output for identical inputs."""
    predictor.reset()
    payload = encode_stream(tokens, predictor, config, stats=stats)
    header = _header_from_config(config, len(tokens), len(payload))
    return serialize_header(header) + payload


def decompress(container: bytes, predictor, *,
               skip_structural_bits: bool = False) -> List[int]:
    """Decode a container back into its token sequence."""
    header, off = parse_header(container)
    if predictor.vocab_size != header.alphabet_size:
        raise VocabMismatch(
            f"predictor vocab {predictor.vocab_size} != container alphabet "
            f"{header.alphabet_size}"
        )
    if len(container) < off + header.payload_length:
        raise InputExhausted(
            f"payload needs {header.payload_length} bytes, "
            f"{len(container) - off} present"
        )
    predictor.reset()
    config = header.stream_config(skip_structural_bits)
    payload = container[off:off + header.payload_length]
    return decode_stream(payload, header.token_count, predictor, config)


def make_predictor(predictor_id: str, vocab_size: int, *,
                   bridge_cmd: Optional[Sequence[str]] = None,
                   timeout: float = 30.0):
    """Build a predictor from its container/CLI identity string.

    "ngram" or "ngram:<order>" -> adaptive n-gram; "uniform"/"byte-uniform"
    -> uniform logits; "external" -> line-protocol client over bridge_cmd.
    """
    if predictor_id.startswith("ngram"):
        order = 2
        if ":" in predictor_id:
            try:
                order = int(predictor_id.split(":", 1)[1])
            except ValueError:
                raise DomainError(f"bad ngram order in {predictor_id!r}") from None
        return NGramPredictor(vocab_size, order=order)
    if predictor_id in ("uniform", "byte-uniform"):
        return UniformPredictor(vocab_size)
    if predictor_id == "external":
        if not bridge_cmd:
            raise BridgeError("external predictor requires a bridge command")
        return ExternalPredictor.from_command(bridge_cmd, vocab_size, timeout=timeout)
    raise DomainError(f"unknown predictor id {predictor_id!r}")


def close_predictor(predictor) -> None:
    """Release an external predictor's subprocess, looking through one
    mismatch wrapper if present; a no-op for in-process predictors."""
    target = getattr(predictor, "inner", predictor)
    close = getattr(target, "close", None)
    if close is not None:
        close()


@dataclass
class BenchReport:
    """Per-stream bench result.

    bits_per_token / compression_ratio are container-inclusive (what lands on
    disk); payload_bits_per_token and baseline_payload_bits_per_token exclude
    the fixed header so overhead attribution compares coder output to coder
    output.  baseline_* fields describe the same-predictor plain
    arithmetic-coding run; plain_noise_failed reports whether that baseline
    survived the same decoder mismatch this report's decode_success was
    measured under (it almost never does — that failure is the point).
    """

    label: str
    tokens: int
    raw_bytes: int
    characters: int
    compressed_bytes: int
    bits_per_token: float
    bits_per_character: float
    compression_ratio: float
    helper_overhead_bits_per_token: float
    decode_success: bool
    payload_bits_per_token: float
    baseline_payload_bits_per_token: float
    plain_noise_failed: bool
    helper_one_rate: float
    predictor_id: str
    codebook_seed: int
    mismatch_eps: float
    mismatch_seed: int

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def bench_stream(
    tokens: Sequence[int],
    config: StreamConfig,
    predictor_factory: Callable[[], object],
    *,
    label: str = "-",
    raw_bytes: Optional[int] = None,
    characters: Optional[int] = None,
    mismatch_eps: Optional[float] = None,
    mismatch_seed: int = 0,
    check_plain_baseline: bool = True,
) -> BenchReport:
    """Compress, decode under injected mismatch, and report.

    mismatch_eps defaults to twice delta (the acceptance noise level); the
    decode leg wraps a fresh predictor in uniform-logit noise at that eps.
    raw_bytes defaults to the naive fixed-width token encoding; characters
    defaults to the token count (callers benching text pass the real counts).
    """
    tokens = list(tokens)
    n = len(tokens)
    if n == 0:
        raise DomainError("bench needs a non-empty token stream")
    if mismatch_eps is None:
        mismatch_eps = 2.0 * float(config.params.delta)
    ell = codeword_length(config.alphabet_size)
    if raw_bytes is None:
        raw_bytes = n * ((ell + 7) // 8)
    if characters is None:
        characters = n

    stats = StreamStats()
    predictor = predictor_factory()
    try:
        container = compress(tokens, config, predictor, stats=stats)
    finally:
        close_predictor(predictor)

    noisy = MismatchWrapper(predictor_factory(), mismatch_eps,
                            seed=mismatch_seed, mode="uniform-logit")
    try:
        decode_success = decompress(container, noisy) == tokens
    except DecodeError:
        decode_success = False
    finally:
        close_predictor(noisy)

    plain_stats = StreamStats()
    predictor = predictor_factory()
    try:
        plain_payload = encode_stream_plain(tokens, predictor, config,
                                            stats=plain_stats)
    finally:
        close_predictor(predictor)
    plain_noise_failed = True
    if check_plain_baseline:
        wrapper = MismatchWrapper(predictor_factory(), mismatch_eps,
                                  seed=mismatch_seed, mode="uniform-logit")
        try:
            plain_noise_failed = (
                decode_stream_plain(plain_payload, n, wrapper, config) != tokens
            )
        except DecodeError:
            plain_noise_failed = True
        finally:
            close_predictor(wrapper)

    coded = stats.helper_zero + stats.helper_one
    return BenchReport(
        label=label,
        tokens=n,
        raw_bytes=raw_bytes,
        characters=characters,
        compressed_bytes=len(container),
        bits_per_token=8.0 * len(container) / n,
        bits_per_character=8.0 * len(container) / characters,
        compression_ratio=len(container) / raw_bytes,
        helper_overhead_bits_per_token=stats.helper_cost_bits / n,
        decode_success=decode_success,
        payload_bits_per_token=8.0 * stats.payload_bytes / n,
        baseline_payload_bits_per_token=8.0 * plain_stats.payload_bytes / n,
        plain_noise_failed=plain_noise_failed,
        helper_one_rate=stats.helper_one / coded if coded else 0.0,
        predictor_id=config.predictor_id,
        codebook_seed=config.codebook_seed,
        mismatch_eps=mismatch_eps,
        mismatch_seed=mismatch_seed,
    )


def chunk_bytes(data: bytes, chunk_size: int = 5000) -> List[bytes]:
    """Split a byte corpus into bench-sized files (≈5 KB pieces)."""
    if chunk_size <= 0:
        raise DomainError(f"chunk_size must be positive, got {chunk_size}")
    return [data[i:i + chunk_size] for i in range(0, len(data), chunk_size)] or [b""]

"""Mismatch-tolerant lossless compression.

Entropy coding normally requires the decoder to reproduce the encoder's
probability model bit-for-bit; a relative difference of 1e-16 in a single
conditional can derail an arithmetic decoder for the rest of the stream.
This package codes each token-bit at a *quantized* probability chosen so
that any decoder whose own estimate stays within a tolerance delta of the
encoder's lands on the identical quantized value, at the cost of one cheap
helper bit per position.  Round-trips then survive genuinely mismatched
predictors (different hardware, noisy replicas, separate processes).
"""

from .codebook import Codebook, PrefixMassTable, build_codebook, codeword_length, token_bits
from .container import (
    BenchReport,
    ContainerHeader,
    bench_stream,
    compress,
    decompress,
    make_predictor,
    parse_header,
    serialize_header,
)
from .core import (
    Quantization,
    StreamConfig,
    StreamStats,
    clamp_unit,
    classify_encoder,
    decode_stream,
    decode_stream_plain,
    decode_token,
    encode_stream,
    encode_stream_plain,
    encode_token,
    quantize_decoder,
)
from .errors import (
    AlphabetTooLarge,
    AlphabetTooSmall,
    BadMagic,
    BridgeError,
    BridgeTimeout,
    DecodeError,
    DenominatorCapExceeded,
    DomainError,
    EmptyPrefixSet,
    HelperProbOutOfRange,
    InputExhausted,
    InternalInconsistency,
    NoRoot,
    NotReciprocalEvenInteger,
    PmaticError,
    ProtocolError,
    RadiusTooSmall,
    TokenOutOfRange,
    UnknownCodeword,
    UnknownToken,
    UnsupportedVersion,
    ValidationError,
    VocabMismatch,
)
from .params import (
    LossBounds,
    OptimalRadius,
    PmaticParams,
    binary_entropy,
    binary_kl,
    loss_bounds,
    new_params,
    optimal_r,
)
from .predictors import (
    PROTOCOL_VERSION,
    ExternalPredictor,
    MismatchWrapper,
    NGramPredictor,
    Predictor,
    UniformPredictor,
)
from .probmodel import (
    cond_tv_bruteforce,
    inject_adversarial_bit_offset,
    inject_uniform_noise,
    cond_tv_bound,
    softmax,
)
from .rangecoder import PROB_DEN_CAP, BinaryProb, RangeDecoder, RangeEncoder
from .rng import SplitMix64

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # params
    "PmaticParams", "new_params", "binary_entropy", "binary_kl",
    "LossBounds", "loss_bounds", "OptimalRadius", "optimal_r",
    # core
    "Quantization", "StreamConfig", "StreamStats", "classify_encoder",
    "quantize_decoder", "clamp_unit", "encode_token", "decode_token",
    "encode_stream", "decode_stream", "encode_stream_plain",
    "decode_stream_plain",
    # codebook
    "Codebook", "PrefixMassTable", "build_codebook", "codeword_length",
    "token_bits",
    # coder
    "BinaryProb", "RangeEncoder", "RangeDecoder", "PROB_DEN_CAP",
    # probability model
    "softmax", "inject_uniform_noise", "inject_adversarial_bit_offset",
    "cond_tv_bruteforce", "cond_tv_bound",
    # predictors
    "Predictor", "NGramPredictor", "UniformPredictor", "MismatchWrapper", "PROTOCOL_VERSION",
    "ExternalPredictor",
    # container
    "ContainerHeader", "serialize_header", "parse_header", "compress",
    "decompress", "make_predictor", "BenchReport", "bench_stream",
    # rng
    "SplitMix64",
    # errors
    "PmaticError", "ValidationError", "DecodeError", "BridgeError",
    "AlphabetTooLarge", "AlphabetTooSmall",
    "DomainError", "NotReciprocalEvenInteger", "RadiusTooSmall",
    "HelperProbOutOfRange", "DenominatorCapExceeded", "NoRoot",
    "TokenOutOfRange", "UnknownToken", "EmptyPrefixSet", "InputExhausted",
    "UnknownCodeword", "InternalInconsistency", "BadMagic",
    "UnsupportedVersion", "VocabMismatch", "ProtocolError", "BridgeTimeout",
]

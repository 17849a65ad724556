"""Command-line tool: compress, decompress, inspect, bench, verify.

Exit codes: 0 success, 2 validation/configuration error, 3 decode failure,
4 bridge (external predictor) error.
"""

from __future__ import annotations

import argparse
import json
import shlex
import sys
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Sequence

from .container import (
    BenchReport,
    bench_stream,
    chunk_bytes,
    close_predictor,
    compress,
    decompress,
    make_predictor,
    parse_header,
)
from .core import StreamConfig
from .errors import (
    BridgeError,
    DecodeError,
    DomainError,
    PmaticError,
    TokenOutOfRange,
    ValidationError,
)
from .params import new_params
from .predictors import MismatchWrapper

# Hard-wired robustness presets: (delta, r).
SETTING1 = (Fraction(1, 1000), Fraction(1, 20))
SETTING2 = (Fraction(1, 100000), Fraction(1, 200))


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--delta", type=str, default=None,
                   help="mismatch tolerance as a rational/decimal, e.g. 0.001 or 1/1000")
    p.add_argument("--r", dest="radius", type=str, default=None,
                   help="quantization bin radius; 1/(2r) must be a positive integer")
    p.add_argument("--setting1", action="store_true",
                   help="preset delta=0.001, r=0.05")
    p.add_argument("--setting2", action="store_true",
                   help="preset delta=0.00001, r=0.005")
    p.add_argument("--predictor", choices=["ngram", "external", "byte-uniform"],
                   default="ngram")
    p.add_argument("--ngram-order", type=int, default=2)
    p.add_argument("--mismatch-eps", type=float, default=None,
                   help="decoder-side injected mismatch level (decode/bench)")
    p.add_argument("--mismatch-seed", type=int, default=0)
    p.add_argument("--mismatch-mode", choices=["uniform-logit", "adversarial-bit"],
                   default="uniform-logit")
    p.add_argument("--codebook-seed", type=int, default=0)
    p.add_argument("--context-max", type=int, default=512)
    p.add_argument("--context-keep", type=int, default=256)
    p.add_argument("--bridge-cmd", type=str, default=None,
                   help="command line for the external predictor process")
    p.add_argument("--bridge-timeout", type=float, default=30.0)
    p.add_argument("--tokens", action="store_true",
                   help="treat input as whitespace-separated token ids")
    p.add_argument("--alphabet-size", type=int, default=None,
                   help="alphabet size for --tokens input (required there)")
    p.add_argument("--skip-structural-bits", action="store_true",
                   help="skip coding bit positions forced by the codebook "
                        "(both sides must agree on this flag)")


def _parse_rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise DomainError(f"cannot parse rational {text!r}: {exc}") from None


def _resolve_params(args):
    if args.setting1 and args.setting2:
        raise DomainError("--setting1 and --setting2 are mutually exclusive")
    delta, radius = SETTING1
    if args.setting2:
        delta, radius = SETTING2
    if args.delta is not None:
        delta = _parse_rational(args.delta)
    if args.radius is not None:
        radius = _parse_rational(args.radius)
    return new_params(delta, radius)


def _predictor_id(args) -> str:
    if args.predictor == "ngram":
        return f"ngram:{args.ngram_order}"
    if args.predictor == "byte-uniform":
        return "uniform"
    return "external"


def _bridge_cmd(args) -> Optional[List[str]]:
    return shlex.split(args.bridge_cmd) if args.bridge_cmd else None


def _build_predictor(predictor_id: str, vocab: int, args):
    predictor = make_predictor(predictor_id, vocab,
                               bridge_cmd=_bridge_cmd(args),
                               timeout=args.bridge_timeout)
    if args.mismatch_eps is not None:
        predictor = MismatchWrapper(predictor, args.mismatch_eps,
                                    seed=args.mismatch_seed,
                                    mode=args.mismatch_mode)
    return predictor


def _read_input_tokens(args) -> "tuple[List[int], int, int]":
    """Returns (tokens, alphabet_size, raw_bytes)."""
    data = Path(args.input).read_bytes()
    if args.tokens:
        if args.alphabet_size is None:
            raise DomainError("--tokens input requires --alphabet-size")
        alphabet = args.alphabet_size
        try:
            tokens = [int(t) for t in data.decode("utf-8").split()]
        except (UnicodeDecodeError, ValueError) as exc:
            raise DomainError(f"bad token file: {exc}") from None
        for t in tokens:
            if not 0 <= t < alphabet:
                raise TokenOutOfRange(f"token {t} outside [0, {alphabet})")
    else:
        alphabet = 256
        if args.alphabet_size not in (None, 256):
            raise DomainError("--alphabet-size other than 256 requires --tokens")
        tokens = list(data)
    return tokens, alphabet, len(data)


def _stream_config(args, alphabet: int) -> StreamConfig:
    return StreamConfig(
        params=_resolve_params(args),
        alphabet_size=alphabet,
        codebook_seed=args.codebook_seed,
        context_max=args.context_max,
        context_keep=args.context_keep,
        predictor_id=_predictor_id(args),
        skip_structural_bits=args.skip_structural_bits,
    )


def _cmd_compress(args) -> int:
    tokens, alphabet, _ = _read_input_tokens(args)
    config = _stream_config(args, alphabet)
    predictor = make_predictor(config.predictor_id, alphabet,
                               bridge_cmd=_bridge_cmd(args),
                               timeout=args.bridge_timeout)
    try:
        container = compress(tokens, config, predictor)
    finally:
        close_predictor(predictor)
    Path(args.output).write_bytes(container)
    print(f"{len(tokens)} tokens -> {len(container)} bytes", file=sys.stderr)
    return 0


def _cmd_decompress(args) -> int:
    container = Path(args.input).read_bytes()
    header, _ = parse_header(container)
    predictor = _build_predictor(header.predictor_id, header.alphabet_size, args)
    try:
        tokens = decompress(container, predictor,
                            skip_structural_bits=args.skip_structural_bits)
    finally:
        close_predictor(predictor)
    out = Path(args.output)
    if header.alphabet_size == 256 and not args.tokens:
        out.write_bytes(bytes(tokens))
    else:
        out.write_text(" ".join(str(t) for t in tokens) + ("\n" if tokens else ""))
    print(f"{len(container)} bytes -> {len(tokens)} tokens", file=sys.stderr)
    return 0


def _cmd_inspect(args) -> int:
    header, off = parse_header(Path(args.input).read_bytes())
    params = header.params()
    fields = [
        ("version", header.version),
        ("alphabet_size", header.alphabet_size),
        ("codebook_seed", header.codebook_seed),
        ("delta", str(header.delta)),
        ("m", header.bin_count),
        ("r", str(params.bin_radius)),
        ("helper_prob", str(params.helper_prob)),
        ("predictor_id", header.predictor_id),
        ("context_max", header.context_max),
        ("context_keep", header.context_keep),
        ("token_count", header.token_count),
        ("payload_length", header.payload_length),
        ("header_bytes", off),
    ]
    for key, value in fields:
        print(f"{key}: {value}")
    return 0


def _bench_one(label: str, tokens: List[int], raw_bytes: int, characters: int,
               args, alphabet: int) -> BenchReport:
    config = _stream_config(args, alphabet)

    def factory():
        return make_predictor(config.predictor_id, alphabet,
                              bridge_cmd=_bridge_cmd(args),
                              timeout=args.bridge_timeout)

    return bench_stream(tokens, config, factory, label=label,
                        raw_bytes=raw_bytes, characters=characters,
                        mismatch_eps=args.mismatch_eps,
                        mismatch_seed=args.mismatch_seed)


def _cmd_bench(args) -> int:
    reports: List[BenchReport] = []
    for name in args.inputs:
        data = Path(name).read_bytes()
        if args.tokens:
            if args.alphabet_size is None:
                raise DomainError("--tokens input requires --alphabet-size")
            tokens = [int(t) for t in data.decode("utf-8").split()]
            reports.append(_bench_one(name, tokens, len(data), len(tokens),
                                      args, args.alphabet_size))
        else:
            for i, chunk in enumerate(chunk_bytes(data, args.chunk_size)):
                if not chunk:
                    continue
                label = f"{name}#{i}" if len(data) > args.chunk_size else name
                reports.append(_bench_one(label, list(chunk), len(chunk),
                                          len(chunk), args, 256))
    if not reports:
        raise DomainError("bench had no non-empty inputs")
    if args.json:
        print(json.dumps([r.as_dict() for r in reports], indent=2))
    else:
        hdr = (f"{'file':<28} {'tokens':>7} {'bits/tok':>9} {'bits/chr':>9} "
               f"{'ratio':>7} {'helper':>8} {'ok':>3} {'plainfail':>9}")
        print(hdr)
        for r in reports:
            print(f"{r.label:<28.28} {r.tokens:>7} {r.bits_per_token:>9.3f} "
                  f"{r.bits_per_character:>9.3f} {r.compression_ratio:>7.2%} "
                  f"{r.helper_overhead_bits_per_token:>8.3f} "
                  f"{'y' if r.decode_success else 'N':>3} "
                  f"{'y' if r.plain_noise_failed else 'n':>9}")
        total_tokens = sum(r.tokens for r in reports)
        total_bytes = sum(r.compressed_bytes for r in reports)
        total_raw = sum(r.raw_bytes for r in reports)
        fails = sum(not r.decode_success for r in reports)
        plain_fails = sum(r.plain_noise_failed for r in reports)
        print(f"{'TOTAL':<28} {total_tokens:>7} "
              f"{8.0 * total_bytes / total_tokens:>9.3f} "
              f"{'':>9} {total_bytes / total_raw:>7.2%} {'':>8} "
              f"{len(reports) - fails:>3}/{len(reports)} "
              f"plain-AC mismatch failures: {plain_fails}/{len(reports)}")
    return 3 if any(not r.decode_success for r in reports) else 0


def _cmd_verify(args) -> int:
    failures = _run_verify_suites()
    return 0 if failures == 0 else 2


def _run_verify_suites() -> int:
    """Scaled-down invariant suites; prints one line per check."""
    import numpy as np

    from .core import classify_encoder, quantize_decoder
    from .probmodel import cond_tv_bruteforce, cond_tv_bound, softmax
    from .rangecoder import BinaryProb, RangeDecoder, RangeEncoder
    from .rng import SplitMix64

    failures = 0

    def report(name: str, ok: bool) -> None:
        nonlocal failures
        failures += not ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}")

    for delta, radius in (SETTING1, SETTING2):
        params = new_params(delta, radius)
        rng = SplitMix64(7)
        d = float(params.delta)
        bad = 0
        trials = 20000
        for _ in range(trials):
            p = rng.uniform(1e-9, 1.0 - 1e-9)
            q = min(max(p + rng.uniform(-d, d), 1e-12), 1.0 - 1e-12)
            if abs(Fraction(q) - Fraction(p)) > params.delta:
                continue
            enc = classify_encoder(p, params)
            if quantize_decoder(q, enc.helper_bit, params) != enc.phat:
                bad += 1
        report(f"quantization agreement, delta={delta} ({trials} pairs)", bad == 0)

    rng = SplitMix64(11)
    bad = 0
    for _ in range(1000):
        base = np.array([rng.uniform(-3, 3) for _ in range(3)])
        noise = np.array([rng.uniform(-0.1, 0.1) for _ in range(3)])
        tv = cond_tv_bruteforce(softmax(base), softmax(base + noise))
        if tv > cond_tv_bound(0.2) + 1e-12:
            bad += 1
    report("conditional-TV bound at eps=0.2 (1000 pairs)", bad == 0)

    rng = SplitMix64(13)
    enc = RangeEncoder()
    events = []
    for _ in range(10000):
        prob = BinaryProb(1 + rng.next_below((1 << 16) - 1), 1 << 16)
        bit = 1 if rng.next_u64() & 1 else 0
        events.append((bit, prob))
        enc.encode_bit(bit, prob)
    payload = enc.finish()
    dec = RangeDecoder(payload)
    ok = all(dec.decode_bit(prob) == bit for bit, prob in events)
    report("range coder round-trip (10000 events)", ok)

    return failures


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pmatic",
        description="Mismatch-tolerant lossless compression with "
                    "probability-matched interval coding.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compress", help="compress a file into a container")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    _add_common_flags(p)
    p.set_defaults(func=_cmd_compress)

    p = sub.add_parser("decompress", help="decode a container")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    _add_common_flags(p)
    p.set_defaults(func=_cmd_decompress)

    p = sub.add_parser("inspect", help="dump a container header")
    p.add_argument("input")
    p.set_defaults(func=_cmd_inspect)

    p = sub.add_parser("bench", help="compression/robustness report")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--chunk-size", type=int, default=5000)
    p.add_argument("--json", action="store_true")
    _add_common_flags(p)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("verify", help="run quick built-in invariant checks")
    p.set_defaults(func=_cmd_verify)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BridgeError as exc:
        print(f"bridge error: {exc}", file=sys.stderr)
        return 4
    except DecodeError as exc:
        print(f"decode error: {exc}", file=sys.stderr)
        return 3
    except (ValidationError, PmaticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Entry point: pick a backend and a transport, then serve one session."""

import argparse
import sys

from .server import serve_stdio, serve_tcp
from .toy import ToyModel


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pmatic-bridge",
        description="External predictor process speaking the pmatic line protocol.",
    )
    backend = parser.add_mutually_exclusive_group(required=True)
    backend.add_argument("--toy", action="store_true",
                         help="deterministic hash-of-context logits (no ML runtime)")
    backend.add_argument("--model", type=str, metavar="PATH",
                         help="causal LM checkpoint for transformers")
    parser.add_argument("--vocab", type=int, default=None,
                        help="pin the toy vocabulary (default: adopt the client's)")
    parser.add_argument("--device", type=str, default="cpu",
                        help="inference device for --model")
    parser.add_argument("--transport", type=str, default="stdio",
                        help="stdio (default) or tcp:<port>")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.toy:
            model = ToyModel(args.vocab)
        else:
            from .model import TransformersModel
            model = TransformersModel(args.model, device=args.device)
    except Exception as exc:  # load failure: diagnose before any handshake
        print(f"bridge startup failed: {exc}", file=sys.stderr)
        return 1

    if args.transport == "stdio":
        serve_stdio(model)
    elif args.transport.startswith("tcp:"):
        try:
            port = int(args.transport[4:])
        except ValueError:
            print(f"bad tcp port in {args.transport!r}", file=sys.stderr)
            return 1
        serve_tcp(model, port)
    else:
        print(f"unknown transport {args.transport!r}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

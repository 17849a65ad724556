"""Session state machine and transports for the predictor line protocol.

One session per process, one in-flight request. Every request line gets
exactly one reply line; malformed input earns an "ERR <why>" and the session
keeps serving. Floats are emitted with repr(), i.e. shortest form that
round-trips to the identical double.
"""

import socket
import sys
from typing import IO, Iterable, Optional

PROTOCOL_VERSION = "pmatic/1"


class BridgeSession:
    """Protocol interpreter: feed request lines, get reply lines.

    State: awaiting-hello until a well-formed HELLO arrives, ready after.
    PREDICT and RESET before the handshake are protocol errors; logit counts
    always equal the handshaked vocabulary size.
    """

    def __init__(self, model):
        self.model = model
        self.vocab: Optional[int] = None

    @property
    def ready(self) -> bool:
        return self.vocab is not None

    def handle(self, line: str) -> str:
        parts = line.split()
        if not parts:
            return "ERR empty request"
        verb = parts[0]
        if verb == "HELLO":
            return self._hello(parts)
        if not self.ready:
            return f"ERR {verb} before HELLO"
        if verb == "PREDICT":
            return self._predict(parts)
        if verb == "RESET":
            self.model.reset()
            return "OK"
        return f"ERR unknown verb {verb}"

    def _hello(self, parts) -> str:
        if len(parts) != 3 or parts[1] != PROTOCOL_VERSION or \
                not parts[2].startswith("vocab="):
            return "ERR malformed HELLO (want: HELLO pmatic/1 vocab=<N>)"
        try:
            client_vocab = int(parts[2][len("vocab="):])
        except ValueError:
            return f"ERR non-numeric vocab {parts[2]!r}"
        if client_vocab < 2:
            return f"ERR vocab must be >= 2, got {client_vocab}"
        self.vocab = self.model.open(client_vocab)
        return f"OK vocab={self.vocab}"

    def _predict(self, parts) -> str:
        try:
            count = int(parts[1]) if len(parts) > 1 else -1
        except ValueError:
            return f"ERR non-numeric context length {parts[1]!r}"
        ids = parts[2:]
        if count < 0 or len(ids) != count:
            return f"ERR PREDICT declared {parts[1] if len(parts) > 1 else '?'} ids, got {len(ids)}"
        try:
            context = [int(t) for t in ids]
        except ValueError:
            return "ERR non-numeric token id"
        for t in context:
            if not 0 <= t < self.vocab:
                return f"ERR token {t} outside [0, {self.vocab})"
        logits = self.model.predict(context)
        if len(logits) != self.vocab:
            return f"ERR model produced {len(logits)} logits for vocab {self.vocab}"
        return f"LOGITS {self.vocab} " + " ".join(repr(float(v)) for v in logits)


def serve_lines(session: BridgeSession, lines: Iterable[bytes], out: IO[bytes]) -> None:
    for raw in lines:
        if not raw:
            break
        reply = session.handle(raw.decode("ascii", errors="replace").strip())
        out.write((reply + "\n").encode("ascii"))
        out.flush()


def serve_stdio(model) -> None:
    session = BridgeSession(model)
    serve_lines(session, iter(sys.stdin.buffer.readline, b""), sys.stdout.buffer)


def serve_tcp(model, port: int) -> None:
    """Single session: accept one connection, serve it, exit."""
    session = BridgeSession(model)
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as server:
        server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        server.bind(("127.0.0.1", port))
        server.listen(1)
        # announce readiness (and the bound port when asked for port 0)
        print(f"LISTENING {server.getsockname()[1]}", flush=True)
        conn, _ = server.accept()
        with conn, conn.makefile("rb") as reader, conn.makefile("wb") as writer:
            serve_lines(session, iter(reader.readline, b""), writer)

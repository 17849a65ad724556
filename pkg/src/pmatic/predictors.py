"""Predictors: context -> logit vector, plus mismatch injection and the
external-process client.

The predictor contract is behavioral: `predict(context)` returns one logit
per token (dimension = vocab_size, same state + same context -> same logits),
`update(context, token)` feeds back the observed/decoded token *after*
prediction, `reset()` returns to the initial state, and `identity` is a short
string recorded in container headers.  Logits, not probabilities, cross this
boundary; callers apply softmax.

The prediction-then-update discipline is part of the contract: encoder and
decoder instances fed the same token sequence must produce bitwise-identical
logit sequences, which is what makes the zero-mismatch baseline exact.
"""

from __future__ import annotations

import select
import subprocess
from typing import Callable, Dict, List, Optional, Protocol, Sequence, runtime_checkable

import numpy as np

from .errors import BridgeTimeout, DomainError, ProtocolError, VocabMismatch
from .probmodel import inject_adversarial_bit_offset, inject_uniform_noise
from .rng import SplitMix64

__all__ = [
    "Predictor",
    "NGramPredictor",
    "UniformPredictor",
    "MismatchWrapper",
    "ExternalPredictor",
    "PROTOCOL_VERSION",
]

PROTOCOL_VERSION = "pmatic/1"


@runtime_checkable
class Predictor(Protocol):
    vocab_size: int
    identity: str

    def predict(self, context: Sequence[int]) -> np.ndarray: ...

    def update(self, context: Sequence[int], token: int) -> None: ...

    def reset(self) -> None: ...


class UniformPredictor:
    """All-zero logits: every token equally likely, no adaptation."""

    def __init__(self, vocab_size: int):
        if vocab_size < 2:
            raise DomainError(f"vocab_size must be >= 2, got {vocab_size}")
        self.vocab_size = vocab_size
        self.identity = "uniform"

    def predict(self, context: Sequence[int]) -> np.ndarray:
        return np.zeros(self.vocab_size)

    def update(self, context: Sequence[int], token: int) -> None:
        pass

    def reset(self) -> None:
        pass


class NGramPredictor:
    """Adaptive additive-smoothing n-gram model.

    logits[t] = ln((count(gram, t) + alpha) / (total(gram) + alpha * vocab)),
    where gram is the last `order` context tokens.  Counts start empty
    (uniform prediction) and grow online via update(); smoothing keeps every
    probability strictly positive.
    """

    def __init__(self, vocab_size: int, order: int = 2, alpha: float = 0.5):
        if vocab_size < 2:
            raise DomainError(f"vocab_size must be >= 2, got {vocab_size}")
        if order < 0:
            raise DomainError(f"order must be >= 0, got {order}")
        if alpha <= 0:
            raise DomainError(f"alpha must be positive, got {alpha}")
        self.vocab_size = vocab_size
        self.order = order
        self.alpha = alpha
        self.identity = f"ngram:{order}"
        self._counts: Dict[tuple, Dict[int, int]] = {}
        self._totals: Dict[tuple, int] = {}

    def _gram(self, context: Sequence[int]) -> tuple:
        return tuple(context[-self.order:]) if self.order else ()

    def predict(self, context: Sequence[int]) -> np.ndarray:
        gram = self._gram(context)
        total = self._totals.get(gram, 0)
        denom = total + self.alpha * self.vocab_size
        logits = np.full(self.vocab_size, float(np.log(self.alpha / denom)))
        seen = self._counts.get(gram)
        if seen:
            for token, count in seen.items():
                logits[token] = np.log((count + self.alpha) / denom)
        return logits

    def update(self, context: Sequence[int], token: int) -> None:
        gram = self._gram(context)
        bucket = self._counts.setdefault(gram, {})
        bucket[token] = bucket.get(token, 0) + 1
        self._totals[gram] = self._totals.get(gram, 0) + 1

    def reset(self) -> None:
        self._counts.clear()
        self._totals.clear()


class MismatchWrapper:
    """Simulates a decoder whose predictions disagree with the encoder's.

    mode "uniform-logit": adds fresh IID uniform(-eps, eps) noise to every
    logit on every predict() call; the noise stream is a deterministic
    function of (seed, call index), and reset() restarts it.  The sup-norm
    guarantee |wrapped - inner|_inf <= eps holds exactly per call (checked).

    mode "adversarial-bit": logits pass through untouched, and the wrapper
    exposes `bit_probability_offset`, a callable the stream decoder applies to
    every conditional bit probability.  It shifts each conditional by exactly
    eps toward 0 or 1 (pseudo-random direction), the worst case the
    per-bit tolerance contract permits.
    """

    _MODES = ("uniform-logit", "adversarial-bit")

    def __init__(self, inner: Predictor, eps: float, seed: int = 0,
                 mode: str = "uniform-logit"):
        if eps < 0:
            raise DomainError(f"eps must be >= 0, got {eps}")
        if mode not in self._MODES:
            raise DomainError(f"mode must be one of {self._MODES}, got {mode!r}")
        self.inner = inner
        self.eps = eps
        self.seed = seed
        self.mode = mode
        self.vocab_size = inner.vocab_size
        self.identity = inner.identity
        self._rng = SplitMix64(seed)
        if mode == "adversarial-bit":
            self.bit_probability_offset = self._offset

    def _offset(self, p: float) -> float:
        direction = 1 if self._rng.next_u64() & 1 else -1
        return inject_adversarial_bit_offset(p, self.eps, direction)

    def predict(self, context: Sequence[int]) -> np.ndarray:
        logits = self.inner.predict(context)
        if self.mode == "adversarial-bit" or self.eps == 0.0:
            return logits
        # A fresh sub-seed per call keeps the noise independent across calls
        # while staying a pure function of (seed, call index).
        noisy = inject_uniform_noise(logits, self.eps, self._rng.next_u64())
        assert np.max(np.abs(noisy - logits)) <= self.eps
        return noisy

    def update(self, context: Sequence[int], token: int) -> None:
        self.inner.update(context, token)

    def reset(self) -> None:
        self.inner.reset()
        self._rng = SplitMix64(self.seed)


def _format_predict(context: Sequence[int]) -> str:
    ids = " ".join(str(t) for t in context)
    return f"PREDICT {len(context)} {ids}".rstrip()


class ExternalPredictor:
    """Client side of the newline-delimited predictor protocol.

    Handshake: "HELLO pmatic/1 vocab=<N>" -> "OK vocab=<N>" (a differing N is
    a VocabMismatch).  Per prediction: "PREDICT <k> <id_1> ... <id_k>" ->
    "LOGITS <N> <v_1> ... <v_N>" with shortest-round-trip decimal floats.
    "RESET" -> "OK".  Any "ERR <msg>" reply, wrong token count, or
    non-numeric value raises ProtocolError; a reply not arriving within the
    timeout raises BridgeTimeout.  Malformed replies never silently
    substitute logits.

    The server sees the full (already window-truncated) context on every
    PREDICT, so update() is a client-side no-op.
    """

    def __init__(self, reader, writer, vocab_size: int, *,
                 timeout: float = 30.0, identity: str = "external",
                 closer: Optional[Callable[[], None]] = None):
        self.vocab_size = vocab_size
        self.identity = identity
        self.timeout = timeout
        self._reader = reader
        self._writer = writer
        self._closer = closer
        self._buf = b""
        self._handshake()

    @classmethod
    def from_command(cls, cmd: Sequence[str], vocab_size: int, *,
                     timeout: float = 30.0,
                     identity: str = "external") -> "ExternalPredictor":
        proc = subprocess.Popen(
            list(cmd), stdin=subprocess.PIPE, stdout=subprocess.PIPE, bufsize=0
        )

        def _close() -> None:
            try:
                proc.stdin.close()
            except OSError:
                pass
            proc.wait(timeout=5)

        return cls(proc.stdout, proc.stdin, vocab_size,
                   timeout=timeout, identity=identity, closer=_close)

    # -- wire helpers -----------------------------------------------------

    def _send(self, line: str) -> None:
        try:
            self._writer.write((line + "\n").encode("ascii"))
            self._writer.flush()
        except (BrokenPipeError, ValueError) as exc:
            raise ProtocolError(f"bridge write failed: {exc}") from exc

    def _recv(self) -> str:
        while True:
            nl = self._buf.find(b"\n")
            if nl >= 0:
                line, self._buf = self._buf[:nl], self._buf[nl + 1:]
                return line.decode("ascii", errors="replace").rstrip("\r")
            fd = self._reader.fileno()
            ready, _, _ = select.select([fd], [], [], self.timeout)
            if not ready:
                raise BridgeTimeout(f"no reply within {self.timeout}s")
            chunk = self._reader.read1(65536) if hasattr(self._reader, "read1") \
                else self._reader.read(65536)
            if not chunk:
                raise ProtocolError("bridge closed the connection")
            self._buf += chunk

    def _expect(self, line: str, what: str) -> List[str]:
        parts = line.split()
        if parts and parts[0] == "ERR":
            raise ProtocolError(f"bridge error during {what}: {line[4:].strip()}")
        return parts

    # -- protocol ---------------------------------------------------------

    def _handshake(self) -> None:
        self._send(f"HELLO {PROTOCOL_VERSION} vocab={self.vocab_size}")
        parts = self._expect(self._recv(), "handshake")
        if len(parts) != 2 or parts[0] != "OK" or not parts[1].startswith("vocab="):
            raise ProtocolError(f"bad handshake reply: {' '.join(parts)!r}")
        try:
            server_vocab = int(parts[1][len("vocab="):])
        except ValueError as exc:
            raise ProtocolError(f"non-numeric vocab in handshake: {parts[1]!r}") from exc
        if server_vocab != self.vocab_size:
            raise VocabMismatch(
                f"bridge vocab {server_vocab} != configured {self.vocab_size}"
            )

    def predict(self, context: Sequence[int]) -> np.ndarray:
        self._send(_format_predict(context))
        parts = self._expect(self._recv(), "predict")
        if len(parts) < 2 or parts[0] != "LOGITS":
            raise ProtocolError(f"expected LOGITS reply, got {' '.join(parts[:2])!r}")
        try:
            count = int(parts[1])
        except ValueError as exc:
            raise ProtocolError(f"non-numeric logit count {parts[1]!r}") from exc
        values = parts[2:]
        if count != self.vocab_size or len(values) != count:
            raise ProtocolError(
                f"expected {self.vocab_size} logits, reply declared {count} "
                f"and carried {len(values)}"
            )
        try:
            logits = np.array([float(v) for v in values])
        except ValueError as exc:
            raise ProtocolError(f"non-numeric logit in reply: {exc}") from exc
        if not np.all(np.isfinite(logits)):
            raise ProtocolError("non-finite logit in reply")
        return logits

    def update(self, context: Sequence[int], token: int) -> None:
        pass

    def reset(self) -> None:
        self._send("RESET")
        parts = self._expect(self._recv(), "reset")
        if parts != ["OK"]:
            raise ProtocolError(f"bad RESET reply: {' '.join(parts)!r}")

    def close(self) -> None:
        if self._closer is not None:
            self._closer()
            self._closer = None

    def __enter__(self) -> "ExternalPredictor":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

"""Deterministic hash-of-context logits: integration tests without an ML stack.

The logit vector is a pure function of (context window, vocab size), so two
processes — or a process and an in-process reimplementation — always agree to
the last bit. Mixing uses the SplitMix64 finalizer over a fingerprint of the
last few tokens.
"""

from typing import List, Optional, Sequence

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_WINDOW = 8  # tokens of context that influence the logits


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def toy_logits(context: Sequence[int], vocab: int) -> List[float]:
    """Logits in [-2, 2) for every token, derived from the context hash."""
    state = _mix((len(context) * _GAMMA + 0x1234ABCD) & _MASK)
    for t in context[-_WINDOW:]:
        state = _mix((state + (t + 1) * _GAMMA) & _MASK)
    out = []
    for _ in range(vocab):
        state = (state + _GAMMA) & _MASK
        out.append((_mix(state) >> 11) / float(1 << 53) * 4.0 - 2.0)
    return out


class ToyModel:
    """Vocab-flexible by default: adopts whatever vocabulary the client
    handshakes, unless pinned with an explicit size."""

    def __init__(self, vocab: Optional[int] = None):
        if vocab is not None and vocab < 2:
            raise ValueError(f"toy vocab must be >= 2, got {vocab}")
        self._pinned = vocab
        self._vocab = vocab

    def open(self, client_vocab: int) -> int:
        self._vocab = self._pinned if self._pinned is not None else client_vocab
        return self._vocab

    def predict(self, context: Sequence[int]) -> List[float]:
        if self._vocab is None:
            raise RuntimeError("predict before open")
        return toy_logits(context, self._vocab)

    def reset(self) -> None:
        pass

"""Causal-LM backend: thin wrapper over a transformers checkpoint.

Loaded lazily so the toy path never touches the ML stack. Logits pass through
untouched (temperature 1, no sampling tricks) — the protocol carries exactly
what the model computed, formatted to round-trip as doubles.
"""

from typing import List, Sequence


class TransformersModel:
    def __init__(self, path: str, device: str = "cpu"):
        try:
            import torch
            from transformers import AutoModelForCausalLM
        except ImportError as exc:  # pragma: no cover - needs the model extra
            raise RuntimeError(
                "model mode needs the [model] extra (transformers + torch): "
                f"{exc}"
            ) from exc
        self._torch = torch
        self._model = AutoModelForCausalLM.from_pretrained(path).to(device).eval()
        self._device = device
        vocab = getattr(self._model.config, "vocab_size", None)
        if not vocab or vocab < 2:
            raise RuntimeError(f"model at {path!r} reports no usable vocab size")
        self._vocab = int(vocab)

    def open(self, client_vocab: int) -> int:
        # reply with the model's true vocabulary; the client decides whether
        # a mismatch is fatal
        return self._vocab

    def predict(self, context: Sequence[int]) -> List[float]:
        torch = self._torch
        if len(context) == 0:
            # causal models need at least one position; a BOS of token 0 keeps
            # the function total and deterministic
            ids = [0]
        else:
            ids = list(context)
        with torch.no_grad():
            tensor = torch.tensor([ids], dtype=torch.long, device=self._device)
            logits = self._model(tensor).logits[0, -1, :]
        return [float(v) for v in logits.tolist()]

    def reset(self) -> None:
        pass

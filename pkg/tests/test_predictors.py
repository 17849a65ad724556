"""Predictor contract tests: n-gram counts, mismatch injection, bridge client."""

import math
import os
import sys
import threading

import numpy as np
import pytest

from pmatic import (
    BridgeTimeout,
    DomainError,
    ExternalPredictor,
    MismatchWrapper,
    NGramPredictor,
    PROTOCOL_VERSION,
    ProtocolError,
    UniformPredictor,
    VocabMismatch,
    softmax,
)


class TestUniformPredictor:
    def test_zero_logits(self):
        p = UniformPredictor(7)
        assert np.array_equal(p.predict([1, 2, 3]), np.zeros(7))
        assert p.identity == "uniform"

    def test_vocab_validation(self):
        with pytest.raises(DomainError):
            UniformPredictor(1)


class TestNGramPredictor:
    def test_cold_start_uniform(self):
        p = NGramPredictor(4, order=2)
        probs = softmax(p.predict([]))
        assert probs == pytest.approx([0.25] * 4, abs=1e-15)

    def test_alternating_stream_order1(self):
        # tokens: a b a b a  (a=0, b=1), order 1, alpha 0.5, vocab 4.
        # 'a' follows 'b' twice out of two b-contexts:
        # P(a|b) = (2 + 0.5) / (2 + 0.5*4) = 0.625
        p = NGramPredictor(4, order=1, alpha=0.5)
        ctx = []
        for tok in [0, 1, 0, 1, 0]:
            p.predict(ctx)
            p.update(ctx, tok)
            ctx.append(tok)
        probs = softmax(p.predict([1]))
        assert probs[0] == pytest.approx(0.625, abs=1e-12)

    def test_logit_formula(self):
        p = NGramPredictor(5, order=2, alpha=0.5)
        p.update([3, 1], 4)
        p.update([3, 1], 4)
        p.update([3, 1], 0)
        logits = p.predict([9, 3, 1])  # gram = last two = (3, 1)
        denom = 3 + 0.5 * 5
        assert logits[4] == pytest.approx(math.log(2.5 / denom), rel=1e-14)
        assert logits[0] == pytest.approx(math.log(1.5 / denom), rel=1e-14)
        assert logits[1] == pytest.approx(math.log(0.5 / denom), rel=1e-14)

    def test_update_scoped_to_gram(self):
        p = NGramPredictor(4, order=1)
        base = p.predict([2])
        p.update([1], 3)  # different gram: prediction for [2] unchanged
        assert np.array_equal(p.predict([2]), base)

    def test_determinism_across_instances(self):
        a = NGramPredictor(6, order=2)
        b = NGramPredictor(6, order=2)
        ctx = []
        for tok in [0, 3, 5, 3, 0, 1, 3, 5]:
            assert np.array_equal(a.predict(ctx), b.predict(ctx))
            a.update(ctx, tok)
            b.update(ctx, tok)
            ctx.append(tok)

    def test_reset(self):
        p = NGramPredictor(4, order=1)
        cold = p.predict([1])
        p.update([1], 2)
        assert not np.array_equal(p.predict([1]), cold)
        p.reset()
        assert np.array_equal(p.predict([1]), cold)

    def test_validation(self):
        with pytest.raises(DomainError):
            NGramPredictor(1)
        with pytest.raises(DomainError):
            NGramPredictor(4, order=-1)
        with pytest.raises(DomainError):
            NGramPredictor(4, alpha=0.0)


class TestMismatchWrapperUniform:
    def test_sup_norm_bound(self):
        inner = NGramPredictor(16, order=1)
        w = MismatchWrapper(NGramPredictor(16, order=1), eps=0.01, seed=3)
        ctx = []
        for tok in [5, 9, 5, 2, 5]:
            clean = inner.predict(ctx)
            noisy = w.predict(ctx)
            assert np.max(np.abs(noisy - clean)) <= 0.01
            assert np.max(np.abs(noisy - clean)) > 0.0
            inner.update(ctx, tok)
            w.update(ctx, tok)
            ctx.append(tok)

    def test_noise_varies_per_call_deterministically(self):
        a = MismatchWrapper(UniformPredictor(8), eps=0.5, seed=11)
        b = MismatchWrapper(UniformPredictor(8), eps=0.5, seed=11)
        first_a, second_a = a.predict([]), a.predict([])
        first_b, second_b = b.predict([]), b.predict([])
        assert np.array_equal(first_a, first_b)
        assert np.array_equal(second_a, second_b)
        assert not np.array_equal(first_a, second_a)

    def test_reset_restarts_noise_stream(self):
        w = MismatchWrapper(UniformPredictor(8), eps=0.5, seed=11)
        first = w.predict([])
        w.predict([])
        w.reset()
        assert np.array_equal(w.predict([]), first)

    def test_eps_zero_identity(self):
        w = MismatchWrapper(UniformPredictor(4), eps=0.0, seed=1)
        assert np.array_equal(w.predict([]), np.zeros(4))

    def test_update_passthrough(self):
        inner = NGramPredictor(4, order=1)
        w = MismatchWrapper(inner, eps=0.0, seed=0)
        w.update([2], 3)
        assert inner._totals == {(2,): 1}

    def test_no_bit_hook_in_uniform_mode(self):
        w = MismatchWrapper(UniformPredictor(4), eps=0.1, seed=0)
        assert not hasattr(w, "bit_probability_offset")

    def test_metadata_mirrors_inner(self):
        w = MismatchWrapper(NGramPredictor(9, order=2), eps=0.1)
        assert w.vocab_size == 9
        assert w.identity == "ngram:2"

    def test_validation(self):
        with pytest.raises(DomainError):
            MismatchWrapper(UniformPredictor(4), eps=-0.1)
        with pytest.raises(DomainError):
            MismatchWrapper(UniformPredictor(4), eps=0.1, mode="sideways")


class TestMismatchWrapperAdversarial:
    def test_logits_untouched(self):
        w = MismatchWrapper(UniformPredictor(8), eps=0.3, seed=2,
                            mode="adversarial-bit")
        assert np.array_equal(w.predict([]), np.zeros(8))

    def test_offset_bound_exact(self):
        from fractions import Fraction

        eps = 0.001
        w = MismatchWrapper(UniformPredictor(4), eps=eps, seed=5,
                            mode="adversarial-bit")
        directions = set()
        for i in range(500):
            p = (i + 1) / 501
            shifted = w.bit_probability_offset(p)
            assert 0.0 < shifted < 1.0
            assert abs(Fraction(shifted) - Fraction(p)) <= Fraction(eps)
            directions.add(1 if shifted > p else -1)
        assert directions == {1, -1}


def _spawn_stub(handler):
    """In-process line server over two pipes; returns (reader, writer) for
    the client end.  handler(line) -> reply | None (silence) | "<close>"."""
    c2s_r, c2s_w = os.pipe()
    s2c_r, s2c_w = os.pipe()
    server_in = os.fdopen(c2s_r, "rb")
    server_out = os.fdopen(s2c_w, "wb", buffering=0)

    def run():
        with server_in, server_out:
            for raw in iter(server_in.readline, b""):
                reply = handler(raw.decode().strip())
                if reply == "<close>":
                    return
                if reply is not None:
                    server_out.write((reply + "\n").encode())

    threading.Thread(target=run, daemon=True).start()
    reader = os.fdopen(s2c_r, "rb", buffering=0)
    writer = os.fdopen(c2s_w, "wb", buffering=0)
    return reader, writer


def _scripted(vocab, predict_reply):
    def handler(line):
        if line.startswith("HELLO"):
            return f"OK vocab={vocab}"
        if line.startswith("PREDICT"):
            return predict_reply(line) if callable(predict_reply) else predict_reply
        if line == "RESET":
            return "OK"
        return "ERR unknown command"

    return handler


class TestExternalPredictor:
    def test_protocol_version(self):
        assert PROTOCOL_VERSION == "pmatic/1"

    def test_loopback_exact_floats(self):
        values = [0.1, -2.5, 1e-17, 3.141592653589793]
        reply = "LOGITS 4 " + " ".join(repr(v) for v in values)
        reader, writer = _spawn_stub(_scripted(4, reply))
        client = ExternalPredictor(reader, writer, 4, timeout=5.0)
        assert np.array_equal(client.predict([1, 2]), np.array(values))

    def test_predict_line_format(self):
        seen = []

        def predict_reply(line):
            seen.append(line)
            return "LOGITS 2 0.0 0.0"

        reader, writer = _spawn_stub(_scripted(2, predict_reply))
        client = ExternalPredictor(reader, writer, 2, timeout=5.0)
        client.predict([5, 6, 7])
        client.predict([])
        assert seen == ["PREDICT 3 5 6 7", "PREDICT 0"]

    def test_wrong_arity(self):
        reader, writer = _spawn_stub(_scripted(3, "LOGITS 3 0.0 0.0"))
        client = ExternalPredictor(reader, writer, 3, timeout=5.0)
        with pytest.raises(ProtocolError):
            client.predict([0])

    def test_declared_count_mismatch(self):
        reader, writer = _spawn_stub(_scripted(3, "LOGITS 2 0.0 0.0"))
        client = ExternalPredictor(reader, writer, 3, timeout=5.0)
        with pytest.raises(ProtocolError):
            client.predict([0])

    def test_err_reply(self):
        reader, writer = _spawn_stub(_scripted(3, "ERR model exploded"))
        client = ExternalPredictor(reader, writer, 3, timeout=5.0)
        with pytest.raises(ProtocolError, match="model exploded"):
            client.predict([0])

    def test_non_numeric_logit(self):
        reader, writer = _spawn_stub(_scripted(2, "LOGITS 2 0.0 banana"))
        client = ExternalPredictor(reader, writer, 2, timeout=5.0)
        with pytest.raises(ProtocolError):
            client.predict([])

    def test_non_finite_logit(self):
        reader, writer = _spawn_stub(_scripted(2, "LOGITS 2 0.0 nan"))
        client = ExternalPredictor(reader, writer, 2, timeout=5.0)
        with pytest.raises(ProtocolError):
            client.predict([])

    def test_vocab_mismatch(self):
        reader, writer = _spawn_stub(_scripted(99, "LOGITS 99 0.0"))
        with pytest.raises(VocabMismatch):
            ExternalPredictor(reader, writer, 4, timeout=5.0)

    def test_malformed_handshake(self):
        def handler(line):
            return "OK banana"

        reader, writer = _spawn_stub(handler)
        with pytest.raises(ProtocolError):
            ExternalPredictor(reader, writer, 4, timeout=5.0)

    def test_timeout(self):
        def handler(line):
            if line.startswith("HELLO"):
                return "OK vocab=2"
            return None  # silence

        reader, writer = _spawn_stub(handler)
        client = ExternalPredictor(reader, writer, 2, timeout=0.2)
        with pytest.raises(BridgeTimeout):
            client.predict([0])

    def test_server_gone(self):
        def handler(line):
            if line.startswith("HELLO"):
                return "OK vocab=2"
            return "<close>"

        reader, writer = _spawn_stub(handler)
        client = ExternalPredictor(reader, writer, 2, timeout=5.0)
        with pytest.raises(ProtocolError, match="closed"):
            client.predict([0])

    def test_reset_roundtrip_and_bad_reply(self):
        reader, writer = _spawn_stub(_scripted(2, "LOGITS 2 0.0 0.0"))
        client = ExternalPredictor(reader, writer, 2, timeout=5.0)
        client.reset()  # OK reply

        def handler(line):
            if line.startswith("HELLO"):
                return "OK vocab=2"
            return "NOPE"

        reader, writer = _spawn_stub(handler)
        client = ExternalPredictor(reader, writer, 2, timeout=5.0)
        with pytest.raises(ProtocolError):
            client.reset()

    def test_update_is_noop(self):
        reader, writer = _spawn_stub(_scripted(2, "LOGITS 2 0.0 0.0"))
        client = ExternalPredictor(reader, writer, 2, timeout=5.0)
        client.update([1], 0)  # nothing sent, nothing raised
        assert np.array_equal(client.predict([]), np.zeros(2))


_ECHO_SERVER = """
import sys
for line in sys.stdin:
    parts = line.split()
    if not parts:
        continue
    if parts[0] == "HELLO":
        vocab = parts[2].split("=")[1]
        print(f"OK vocab={vocab}", flush=True)
    elif parts[0] == "PREDICT":
        print("LOGITS 4 0.5 0.5 0.5 0.5", flush=True)
    elif parts[0] == "RESET":
        print("OK", flush=True)
    else:
        print("ERR unknown", flush=True)
"""


class TestFromCommand:
    def test_subprocess_stub(self):
        with ExternalPredictor.from_command(
            [sys.executable, "-c", _ECHO_SERVER], 4, timeout=10.0
        ) as client:
            logits = client.predict([1, 2, 3])
            assert np.array_equal(logits, np.full(4, 0.5))
            client.reset()

"""Composition with the host compressor over real pipes.

The bridge library never imports the host package; these tests do, because
their whole point is to drive the host's protocol client (ExternalPredictor,
the CLI's --predictor external path) against this package's server and
check that the pipe is invisible: same logits, same containers, same tokens.
"""

import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest

from pmatic import (
    ExternalPredictor,
    ProtocolError,
    StreamConfig,
    VocabMismatch,
    compress,
    decompress,
    new_params,
)
from pmatic.cli import main as pmatic_main
from pmatic_bridge import toy_logits

TOY_CMD = [sys.executable, "-m", "pmatic_bridge", "--toy"]


def toy_predictor(vocab: int, extra=()) -> ExternalPredictor:
    return ExternalPredictor.from_command(TOY_CMD + list(extra), vocab, timeout=60.0)


def _chaos_cmd(predict_reply: str):
    """A server that handshakes honestly, then answers every PREDICT with a
    canned line.  For exercising the client's reply validation."""
    script = (
        "import sys\n"
        "for line in sys.stdin:\n"
        "    line = line.strip()\n"
        "    if line.startswith('HELLO'):\n"
        "        print('OK vocab=' + line.rsplit('=', 1)[1], flush=True)\n"
        "    elif line.startswith('PREDICT'):\n"
        f"        print({predict_reply!r}, flush=True)\n"
        "    else:\n"
        "        print('OK', flush=True)\n"
    )
    return [sys.executable, "-c", script]


class _InProcessToy:
    """The bridge's toy formula computed locally: the reference against which
    the piped predictor must be bit-identical."""

    def __init__(self, vocab_size: int):
        self.vocab_size = vocab_size
        self.identity = "external"

    def predict(self, context):
        return np.array(toy_logits(list(context), self.vocab_size))

    def update(self, context, token):
        pass

    def reset(self):
        pass


class TestClientServerPair:
    def test_handshake_predict_reset(self):
        with toy_predictor(16) as predictor:
            got = predictor.predict([3, 1, 4, 1, 5])
            want = np.array(toy_logits([3, 1, 4, 1, 5], 16))
            assert np.array_equal(got, want)  # exact: repr() round-trips doubles
            predictor.reset()
            assert np.array_equal(predictor.predict([3, 1, 4, 1, 5]), want)

    def test_empty_context(self):
        with toy_predictor(8) as predictor:
            assert np.array_equal(predictor.predict([]),
                                  np.array(toy_logits([], 8)))

    def test_vocab_mismatch_detected(self):
        # server pinned to 16 answers "OK vocab=16"; the client asked for 8
        with pytest.raises(VocabMismatch):
            toy_predictor(8, extra=["--vocab", "16"])

    def test_predict_before_hello_rejected_on_the_wire(self):
        proc = subprocess.Popen(TOY_CMD, stdin=subprocess.PIPE,
                                stdout=subprocess.PIPE, bufsize=0)
        try:
            proc.stdin.write(b"PREDICT 1 0\n")
            assert proc.stdout.readline() == b"ERR PREDICT before HELLO\n"
            proc.stdin.write(b"HELLO pmatic/1 vocab=4\n")  # session still usable
            assert proc.stdout.readline() == b"OK vocab=4\n"
        finally:
            proc.stdin.close()
            proc.wait(timeout=30)

    def test_err_reply_raises(self):
        predictor = ExternalPredictor.from_command(
            _chaos_cmd("ERR backend exploded"), 8, timeout=60.0)
        with predictor, pytest.raises(ProtocolError, match="backend exploded"):
            predictor.predict([0])

    def test_short_logits_reply_raises(self):
        predictor = ExternalPredictor.from_command(
            _chaos_cmd("LOGITS 8 0.25 -0.5"), 8, timeout=60.0)
        with predictor, pytest.raises(ProtocolError, match="expected 8 logits"):
            predictor.predict([0])

    def test_non_numeric_logit_raises(self):
        predictor = ExternalPredictor.from_command(
            _chaos_cmd("LOGITS 2 0.25 banana"), 2, timeout=60.0)
        with predictor, pytest.raises(ProtocolError, match="non-numeric"):
            predictor.predict([0])

    def test_non_finite_logit_raises(self):
        predictor = ExternalPredictor.from_command(
            _chaos_cmd("LOGITS 2 nan 0.0"), 2, timeout=60.0)
        with predictor, pytest.raises(ProtocolError, match="non-finite"):
            predictor.predict([0])


class TestStreamTransparency:
    CONFIG = StreamConfig(
        params=new_params(Fraction(1, 1000), Fraction(1, 20)),
        alphabet_size=16,
        codebook_seed=7,
        predictor_id="external",
    )
    TOKENS = [(i * i * 7 + 3) % 16 for i in range(120)]

    def test_container_matches_in_process_reference(self):
        with toy_predictor(16) as piped:
            via_pipe = compress(self.TOKENS, self.CONFIG, piped)
        via_local = compress(self.TOKENS, self.CONFIG, _InProcessToy(16))
        assert via_pipe == via_local  # the pipe is byte-invisible

    def test_decompress_through_bridge(self):
        container = compress(self.TOKENS, self.CONFIG, _InProcessToy(16))
        with toy_predictor(16) as piped:
            assert decompress(container, piped) == self.TOKENS

    def test_reused_client_is_deterministic(self):
        with toy_predictor(16) as piped:
            first = compress(self.TOKENS, self.CONFIG, piped)
            again = compress(self.TOKENS, self.CONFIG, piped)
        assert first == again


class TestCliComposition:
    BRIDGE_CMD = f"{sys.executable} -m pmatic_bridge --toy"

    def test_token_round_trip_via_external_predictor(self, tmp_path):
        tokens = [0, 1, 2, 3, 4, 5, 6, 7, 2, 5]
        src = tmp_path / "tokens.txt"
        packed = tmp_path / "tokens.pmtc"
        out = tmp_path / "tokens.out"
        src.write_text(" ".join(str(t) for t in tokens))

        rc = pmatic_main([
            "compress", str(src), "-o", str(packed),
            "--tokens", "--alphabet-size", "8",
            "--predictor", "external", "--bridge-cmd", self.BRIDGE_CMD,
        ])
        assert rc == 0

        rc = pmatic_main([
            "decompress", str(packed), "-o", str(out),
            "--tokens", "--bridge-cmd", self.BRIDGE_CMD,
        ])
        assert rc == 0
        assert [int(t) for t in out.read_text().split()] == tokens

    def test_missing_bridge_cmd_is_a_bridge_error(self, tmp_path):
        src = tmp_path / "tokens.txt"
        src.write_text("0 1 2")
        rc = pmatic_main([
            "compress", str(src), "-o", str(tmp_path / "x.pmtc"),
            "--tokens", "--alphabet-size", "4", "--predictor", "external",
        ])
        assert rc == 4

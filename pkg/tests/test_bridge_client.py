"""Client behavior against the in-package mock server."""

import json
import sys

import numpy as np
import pytest

from stegalign.lm import BridgeError, BridgeProvider
from stegalign.mock_bridge import MockServer, mock_vocabulary, quantized_response


class _InProcessTransport:
    def __init__(self, server: MockServer):
        self.server = server

    def request(self, obj):
        reply = self.server.handle(obj)
        if reply is None:
            raise BridgeError("server closed")
        return reply

    def close(self):
        pass


class _ScriptedTransport:
    def __init__(self, replies):
        self.replies = list(replies)

    def request(self, obj):
        return self.replies.pop(0)

    def close(self):
        pass


def test_handshake_and_weights_sum():
    provider = BridgeProvider(_InProcessTransport(MockServer(7, 16)), precision=12)
    assert provider.vocab_size == 16
    assert provider.vocab_hash == mock_vocabulary(16).content_hash
    w = provider.weights((1, 2, 3))
    assert int(w.sum()) == 1 << 12


def test_identical_context_identical_weights():
    provider = BridgeProvider(_InProcessTransport(MockServer(7, 16)), precision=12)
    a = provider.weights((4, 4))
    b = provider.weights((4, 4))
    assert np.array_equal(a, b)


def test_log_probs_mask_zero_weights():
    provider = BridgeProvider(_InProcessTransport(MockServer(7, 8)), precision=20)
    logits = provider.log_probs(())
    w = provider.weights(())
    assert np.all((w > 0) == (logits > -1e8))


def test_malformed_handshake_aborts():
    with pytest.raises(BridgeError):
        BridgeProvider(_ScriptedTransport([{"v": 1, "op": "hello"}]), precision=12)


def test_wrong_sum_aborts():
    hello = {"v": 1, "op": "hello", "vocab_hash": "sha256:x", "vocab_size": 2}
    bad = {"v": 1, "op": "dist", "weights": [3, 4]}
    provider = BridgeProvider(_ScriptedTransport([hello, bad]), precision=8)
    with pytest.raises(BridgeError):
        provider.weights(())


def test_wrong_shape_aborts():
    hello = {"v": 1, "op": "hello", "vocab_hash": "sha256:x", "vocab_size": 3}
    bad = {"v": 1, "op": "dist", "weights": [128, 128]}
    provider = BridgeProvider(_ScriptedTransport([hello, bad]), precision=8)
    with pytest.raises(BridgeError):
        provider.weights(())


def test_error_frame_aborts():
    hello = {"v": 1, "op": "hello", "vocab_hash": "sha256:x", "vocab_size": 2}
    err = {"v": 1, "op": "error", "code": "boom", "message": "exploded"}
    provider = BridgeProvider(_ScriptedTransport([hello, err]), precision=8)
    with pytest.raises(BridgeError, match="boom"):
        provider.weights(())


def test_stdio_subprocess_roundtrip():
    provider = BridgeProvider.stdio(
        [sys.executable, "-m", "stegalign.mock_bridge", "--seed", "7",
         "--vocab-size", "16"],
        precision=12,
    )
    try:
        w = provider.weights((1, 2, 3))
        assert w.tolist() == quantized_response(7, [1, 2, 3], 16, 12)
        again = provider.weights((1, 2, 3))
        assert np.array_equal(w, again)
    finally:
        provider.close()


def test_mock_rejects_out_of_range_context():
    server = MockServer(7, 4)
    reply = server.handle({"v": 1, "op": "dist", "ctx": [9], "precision": 8})
    assert reply["op"] == "error"

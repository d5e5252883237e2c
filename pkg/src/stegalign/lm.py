"""Next-token distribution providers and distribution-shaping helpers.

A provider maps a token context to a vector of log-probabilities over a
fixed vocabulary. Two implementations exist: the built-in n-gram model
(exact rationals converted once to floats) and a client for external
model processes speaking the newline-delimited JSON wire protocol
(which ship integer weights, so float nondeterminism never crosses the
process boundary). Either way, identical contexts yield bit-identical
vectors.
"""

from __future__ import annotations

import json
import socket
import subprocess
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import NGramModel
from .numerics import det_exp, det_log, det_log2, exact_sum

# Finite stand-in for log(0); exp underflows to exactly +0.0 well
# before this, so masked tokens drop out of every softmax.
NEG_LOGIT = -1.0e9

PROTOCOL_VERSION = 1


@dataclass
class ContextState:
    """Prompt plus generated-so-far token ids; append-only."""

    prompt: tuple[int, ...] = ()
    generated: list[int] = field(default_factory=list)

    @property
    def step(self) -> int:
        return len(self.generated)

    @property
    def history(self) -> tuple[int, ...]:
        return self.prompt + tuple(self.generated)

    def append(self, token: int) -> None:
        self.generated.append(token)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Max-subtracted softmax using deterministic exponentials."""
    arr = np.asarray(logits, dtype=np.float64)
    z = det_exp(arr - arr.max())
    return z / exact_sum(z)


def entropy_bits(probs: np.ndarray) -> float:
    """Shannon entropy in bits with 0*log(0) := 0."""
    p = np.asarray(probs, dtype=np.float64)
    nz = p[p > 0.0]
    return -exact_sum(nz * det_log2(nz))


def truncate(probs: np.ndarray, top_k: int | None = None, top_p: float = 1.0) -> np.ndarray:
    """Keep the top-k tokens, then the smallest top-p prefix; renormalize.

    Ordering is by descending probability with ascending-id tie-breaks;
    both ends must agree on it or decoding diverges. top_k = |V| with
    top_p = 1 is the identity.
    """
    p = np.asarray(probs, dtype=np.float64)
    n = p.size
    k = n if top_k is None else top_k
    if not 1 <= k <= n:
        raise ValueError(f"top_k must be in [1, {n}]")
    if not 0.0 < top_p <= 1.0:
        raise ValueError("top_p must be in (0, 1]")
    if k == n and top_p >= 1.0:
        return p
    ids = np.arange(n)
    order = np.lexsort((ids, -p))
    keep = order[:k]
    if top_p < 1.0:
        csum = np.cumsum(p[keep])
        cutoff = int(np.searchsorted(csum, top_p * float(csum[-1]) - 1e-15)) + 1
        keep = keep[:cutoff]
    out = np.zeros_like(p)
    out[keep] = p[keep]
    return out / exact_sum(out)


class NGramProvider:
    """Deterministic provider over the built-in n-gram model."""

    def __init__(self, model: NGramModel):
        self.model = model
        self.vocab_size = model.vocab_size
        self.vocab_hash = model.vocab_hash
        # Distributions depend on at most the trailing order-1 tokens.
        self.context_len: int | None = model.order - 1

    def log_probs(self, history: Sequence[int]) -> np.ndarray:
        probs = self.model.distribution(history)
        arr = np.array([float(p) for p in probs], dtype=np.float64)
        return det_log(arr)


class BridgeError(RuntimeError):
    """Protocol violation or transport failure; sessions must abort."""


class _StdioTransport:
    def __init__(self, command: Sequence[str]):
        self.proc = subprocess.Popen(
            list(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
        )

    def request(self, obj: dict) -> dict:
        assert self.proc.stdin and self.proc.stdout
        self.proc.stdin.write(json.dumps(obj) + "\n")
        self.proc.stdin.flush()
        line = self.proc.stdout.readline()
        if not line:
            raise BridgeError("bridge process closed the stream")
        return json.loads(line)

    def close(self) -> None:
        try:
            if self.proc.stdin:
                self.proc.stdin.write(json.dumps({"v": PROTOCOL_VERSION, "op": "bye"}) + "\n")
                self.proc.stdin.flush()
        except (OSError, ValueError):
            pass
        self.proc.terminate()
        self.proc.wait(timeout=10)


class _TcpTransport:
    def __init__(self, host: str, port: int, timeout: float = 30.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        self.rfile = self.sock.makefile("r", encoding="utf-8")
        self.wfile = self.sock.makefile("w", encoding="utf-8")

    def request(self, obj: dict) -> dict:
        self.wfile.write(json.dumps(obj) + "\n")
        self.wfile.flush()
        line = self.rfile.readline()
        if not line:
            raise BridgeError("bridge closed the connection")
        return json.loads(line)

    def close(self) -> None:
        try:
            self.wfile.write(json.dumps({"v": PROTOCOL_VERSION, "op": "bye"}) + "\n")
            self.wfile.flush()
        except OSError:
            pass
        self.sock.close()


class BridgeProvider:
    """Client for external distribution servers on the wire protocol.

    The server quantizes before responding, so only integers cross the
    wire; logits are reconstructed as log(w / 2^P) with zero-weight
    tokens pinned to a large negative sentinel. Malformed or
    non-summing responses raise immediately; there is no fallback.
    """

    def __init__(self, transport, precision: int):
        self.transport = transport
        self.precision = precision
        self.context_len: int | None = None  # full history matters
        hello = self._call({"v": PROTOCOL_VERSION, "op": "hello"})
        try:
            self.vocab_hash = hello["vocab_hash"]
            self.vocab_size = int(hello["vocab_size"])
        except (KeyError, TypeError, ValueError) as exc:
            raise BridgeError(f"malformed handshake: {hello!r}") from exc

    @classmethod
    def stdio(cls, command: Sequence[str], precision: int) -> "BridgeProvider":
        return cls(_StdioTransport(command), precision)

    @classmethod
    def tcp(cls, host: str, port: int, precision: int, timeout: float = 30.0) -> "BridgeProvider":
        return cls(_TcpTransport(host, port, timeout), precision)

    def _call(self, obj: dict) -> dict:
        try:
            reply = self.transport.request(obj)
        except (OSError, json.JSONDecodeError, subprocess.SubprocessError) as exc:
            raise BridgeError(f"bridge transport failure: {exc}") from exc
        if not isinstance(reply, dict) or reply.get("v") != PROTOCOL_VERSION:
            raise BridgeError(f"unexpected protocol frame: {reply!r}")
        if reply.get("op") == "error":
            raise BridgeError(
                f"bridge error {reply.get('code')!r}: {reply.get('message')}"
            )
        return reply

    def weights(self, history: Sequence[int]) -> np.ndarray:
        reply = self._call(
            {
                "v": PROTOCOL_VERSION,
                "op": "dist",
                "ctx": [int(t) for t in history],
                "precision": self.precision,
            }
        )
        w = reply.get("weights")
        if not isinstance(w, list) or len(w) != self.vocab_size:
            raise BridgeError("dist response has wrong shape")
        arr = np.asarray(w, dtype=np.int64)
        if np.any(arr < 0) or int(arr.sum()) != 1 << self.precision:
            raise BridgeError("dist response weights do not sum to 2^precision")
        return arr

    def log_probs(self, history: Sequence[int]) -> np.ndarray:
        w = self.weights(history)
        out = np.full(w.size, NEG_LOGIT, dtype=np.float64)
        nz = w > 0
        out[nz] = det_log(w[nz].astype(np.float64) / float(1 << self.precision))
        return out

    def close(self) -> None:
        self.transport.close()

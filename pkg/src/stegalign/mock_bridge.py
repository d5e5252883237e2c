"""Minimal distribution server for protocol conformance tests.

Serves the newline-delimited JSON wire protocol over stdio or TCP with
a keyed-hash toy model: pseudo-weights are derived from BLAKE2b of
(seed, context, token) and rescaled to 2^P in exact integer arithmetic,
so responses are identical on every platform. Real model servers live
in the separate bridge package; this one exists so the client, the
golden protocol vectors, and external implementations have a fixed
reference to agree with.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import socketserver
import sys
from fractions import Fraction

from .corpus import Vocabulary, sha256_text
from .quantize import quantize

PROTOCOL_VERSION = 1


def hash_model_weights(seed: int, ctx: list[int], vocab_size: int) -> list[int]:
    """Deterministic pseudo-weights in [1, 4096] per token."""
    ctx_bytes = ("hashlm:%d:%s" % (seed, ",".join(str(t) for t in ctx))).encode()
    weights = []
    for tok in range(vocab_size):
        digest = hashlib.blake2b(
            ctx_bytes + b":%d" % tok, digest_size=8
        ).digest()
        weights.append(1 + int.from_bytes(digest, "big") % 4096)
    return weights


def mock_vocabulary(vocab_size: int) -> Vocabulary:
    return Vocabulary(("<unk>",) + tuple(f"w{i}" for i in range(1, vocab_size)))


def quantized_response(seed: int, ctx: list[int], vocab_size: int, precision: int) -> list[int]:
    raw = hash_model_weights(seed, ctx, vocab_size)
    total = sum(raw)
    probs = [Fraction(w, total) for w in raw]
    return [int(w) for w in quantize(probs, precision).weights]


class MockServer:
    def __init__(self, seed: int, vocab_size: int):
        self.seed = seed
        self.vocab_size = vocab_size
        self.vocab_hash = mock_vocabulary(vocab_size).content_hash

    def handle(self, frame: dict) -> dict | None:
        if not isinstance(frame, dict) or frame.get("v") != PROTOCOL_VERSION:
            return self._error("bad-version", "unsupported protocol version")
        op = frame.get("op")
        if op == "hello":
            return {
                "v": PROTOCOL_VERSION,
                "op": "hello",
                "vocab_hash": self.vocab_hash,
                "vocab_size": self.vocab_size,
            }
        if op == "dist":
            ctx = frame.get("ctx")
            precision = frame.get("precision")
            if not isinstance(ctx, list) or not isinstance(precision, int):
                return self._error("bad-request", "dist needs ctx list and precision")
            if any(not isinstance(t, int) or not 0 <= t < self.vocab_size for t in ctx):
                return self._error("bad-context", "context ids out of range")
            weights = quantized_response(self.seed, ctx, self.vocab_size, precision)
            return {"v": PROTOCOL_VERSION, "op": "dist", "weights": weights}
        if op == "bye":
            return None
        return self._error("bad-op", f"unknown op {op!r}")

    @staticmethod
    def _error(code: str, message: str) -> dict:
        return {"v": PROTOCOL_VERSION, "op": "error", "code": code, "message": message}


def serve_stdio(server: MockServer) -> None:
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            frame = json.loads(line)
        except json.JSONDecodeError:
            frame = None
        reply = server.handle(frame if frame is not None else {})
        if reply is None:
            break
        sys.stdout.write(json.dumps(reply) + "\n")
        sys.stdout.flush()


def serve_tcp(server: MockServer, host: str, port: int) -> None:
    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            for raw in self.rfile:
                try:
                    frame = json.loads(raw.decode("utf-8"))
                except json.JSONDecodeError:
                    frame = {}
                reply = server.handle(frame)
                if reply is None:
                    return
                self.wfile.write((json.dumps(reply) + "\n").encode("utf-8"))

    with socketserver.TCPServer((host, port), Handler) as srv:
        print(f"listening on {srv.server_address[0]}:{srv.server_address[1]}", file=sys.stderr)
        srv.serve_forever()


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="toy distribution server")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--vocab-size", type=int, default=16)
    parser.add_argument("--transport", choices=("stdio", "tcp"), default="stdio")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=0)
    parser.add_argument("--export-vocab", metavar="PATH", default=None)
    args = parser.parse_args(argv)
    if args.export_vocab:
        mock_vocabulary(args.vocab_size).save(args.export_vocab)
        return 0
    server = MockServer(args.seed, args.vocab_size)
    if args.transport == "stdio":
        serve_stdio(server)
    else:
        serve_tcp(server, args.host, args.port)
    return 0


if __name__ == "__main__":
    sys.exit(main())

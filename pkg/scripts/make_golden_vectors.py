#!/usr/bin/env python3
"""Regenerate the committed golden vector files.

Run from the repository root:

    python3 scripts/make_golden_vectors.py

Three files are produced under tests/golden/:
  codec_vectors.json    frozen per-step codec behavior
  quantize_parity.json  digest of the float quantization parity stream
  bridge_protocol.json  exact protocol frames for the hashlm backend
"""

from __future__ import annotations

import hashlib
import json
import struct
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from stegalign.codecs import (  # noqa: E402
    Bits,
    KeyStream,
    MessageReader,
    StepDist,
    make_decoder,
    make_encoder,
)
from stegalign.mock_bridge import MockServer  # noqa: E402
from stegalign.quantize import QuantDist, quantize  # noqa: E402

GOLDEN_DIR = Path(__file__).resolve().parents[1] / "tests" / "golden"

KEY = bytes.fromhex(
    "000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f"
)
NONCE = bytes.fromhex("00112233445566778899aabbccddeeff")
MESSAGE_HEX = "c0ffee1234deadbeef55aa"


def codec_vectors() -> dict:
    rng = np.random.default_rng(2024)
    precision = 12
    dists = []
    for _ in range(6):
        v = int(rng.integers(3, 9))
        w = rng.multinomial(1 << precision, rng.dirichlet(np.ones(v)))
        dists.append([int(x) for x in w])
    cases = []
    for name in ("meteor", "discop", "adg", "ac"):
        pad = KeyStream(KEY, NONCE, "pad")
        msg = MessageReader(Bits.from_hex(MESSAGE_HEX), pad)
        mask = KeyStream(KEY, NONCE, "mask")
        codec = make_encoder(name, mask=mask, msg=msg, precision=precision)
        tokens = []
        bits = []
        step = 0
        while codec.embedded < msg.real_bits and step < 400:
            weights = dists[step % len(dists)]
            sd = StepDist(QuantDist(weights=np.array(weights), precision=precision))
            res = codec.encode_step(sd, msg)
            tokens.append(res.token)
            bits.append(res.bits_embedded)
            step += 1
        # sanity: the decoder must reproduce the message prefix
        dec_mask = KeyStream(KEY, NONCE, "mask")
        dec = make_decoder(name, mask=dec_mask, precision=precision)
        sink_bits = ""
        for i, token in enumerate(tokens):
            weights = dists[i % len(dists)]
            sd = StepDist(QuantDist(weights=np.array(weights), precision=precision))
            value, n = dec.decode_step(sd, token)
            if n:
                sink_bits += format(value, f"0{n}b")
        want = Bits(len(Bits.from_hex(MESSAGE_HEX)), 32) + Bits.from_hex(MESSAGE_HEX)
        assert sink_bits[: want.length] == want.to01(), f"{name} self-check failed"
        cases.append(
            {"algo": name, "tokens": tokens, "bits_per_step": bits}
        )
    return {
        "version": 1,
        "precision": precision,
        "key": KEY.hex(),
        "nonce": NONCE.hex(),
        "message": MESSAGE_HEX,
        "weights_cycle": dists,
        "cases": cases,
    }


def parity_digest(count: int = 10_000) -> dict:
    stream_words: list[int] = []

    def words_needed(n: int) -> None:
        counter = len(stream_words) // 8
        while len(stream_words) < n:
            block = hashlib.blake2b(
                b"quantvec|" + counter.to_bytes(8, "big"),
                key=bytes(32),
                digest_size=64,
            ).digest()
            stream_words.extend(
                int.from_bytes(block[i : i + 8], "big") for i in range(0, 64, 8)
            )
            counter += 1

    digest = hashlib.blake2b(digest_size=32)
    cursor = 0

    def next_word() -> int:
        nonlocal cursor
        words_needed(cursor + 1)
        word = stream_words[cursor]
        cursor += 1
        return word

    for _ in range(count):
        v = 8 + (next_word() % 57)
        raw = [next_word() for _ in range(v)]
        total = float(sum(raw))
        probs = np.array([float(u) / total for u in raw])
        weights = quantize(probs, 20).weights
        digest.update(struct.pack(">I", v))
        digest.update(struct.pack(f">{v}q", *[int(w) for w in weights]))
    return {"version": 1, "count": count, "precision": 20, "blake2b256": digest.hexdigest()}


def protocol_frames() -> dict:
    server = MockServer(seed=7, vocab_size=16)
    exchanges = []
    requests = [
        {"v": 1, "op": "hello"},
        {"v": 1, "op": "dist", "ctx": [], "precision": 12},
        {"v": 1, "op": "dist", "ctx": [1, 2, 3], "precision": 12},
        {"v": 1, "op": "dist", "ctx": [15, 0, 7, 7], "precision": 20},
        {"v": 1, "op": "nonsense"},
    ]
    for req in requests:
        exchanges.append({"request": req, "response": server.handle(req)})
    return {"version": 1, "seed": 7, "vocab_size": 16, "exchanges": exchanges}


def main() -> None:
    GOLDEN_DIR.mkdir(parents=True, exist_ok=True)
    files = {
        "codec_vectors.json": codec_vectors(),
        "quantize_parity.json": parity_digest(),
        "bridge_protocol.json": protocol_frames(),
    }
    for name, payload in files.items():
        path = GOLDEN_DIR / name
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()

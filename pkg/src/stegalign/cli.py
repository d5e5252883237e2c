"""Batch command-line interface.

Subcommands cover corpus preparation (build-vocab, build-freq,
merge-freq, train-lm), the covert channel itself (encode, decode,
generate), and evaluation (evaluate, sweep). Encode writes a manifest
pinning hashes of every shared artifact; decode refuses to run when a
hash disagrees, because a mismatched artifact guarantees a desync.

Exit codes: 0 success, 2 malformed input, 3 artifact hash mismatch,
4 desync during decode, 5 message did not fit (partial embed).
"""

from __future__ import annotations

import argparse
import json
import os
import secrets
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

from . import corpus as corpus_mod
from .codecs import CODEC_NAMES, Bits, DesyncError
from .corpus import (
    FreqTable,
    NGramModel,
    Vocabulary,
    atomic_write_text,
    count_frequencies,
    detokenize,
    merge_frequencies,
    tokenize,
    train_ngram,
)
from .lm import BridgeError, BridgeProvider, NGramProvider
from .metrics import build_report
from .pipeline import StegoSession, decode_message, encode_message, generate_random
from .quantize import DEFAULT_PRECISION
from .reformer import ReformConfig, ReformContext

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_HASH_MISMATCH = 3
EXIT_DESYNC = 4
EXIT_PARTIAL = 5

MANIFEST_FORMAT = "stegalign-manifest-v1"
KEY_ENV = "STEGALIGN_KEY"


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE):
        super().__init__(message)
        self.code = code


def _read_corpus_streams(path: str, vocab: Vocabulary, scheme: str) -> list[list[int]]:
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        payload = json.loads(text)
        if "streams" in payload:
            return [list(map(int, s)) for s in payload["streams"]]
        if "tokens" in payload:
            return [list(map(int, payload["tokens"]))]
        raise CliError(f"{path}: JSON corpus needs a 'streams' or 'tokens' key")
    return [tokenize(line, vocab, scheme) for line in text.splitlines() if line.strip()]


def _load_key(args) -> bytes:
    key_hex = args.key or os.environ.get(KEY_ENV)
    if not key_hex:
        raise CliError(f"no key: pass --key or set {KEY_ENV}")
    try:
        key = bytes.fromhex(key_hex)
    except ValueError as exc:
        raise CliError(f"key is not valid hex: {exc}") from None
    if len(key) != 32:
        raise CliError("key must be 32 bytes (64 hex digits)")
    return key


def _load_message(spec: str) -> bytes:
    if spec.startswith("@"):
        return Path(spec[1:]).read_bytes()
    try:
        return bytes.fromhex(spec)
    except ValueError as exc:
        raise CliError(f"message is not valid hex: {exc}") from None


def _reform_config(args) -> ReformConfig:
    eps = Fraction(args.epsilon_freq) if args.epsilon_freq else None
    return ReformConfig(
        theta=args.theta,
        c=args.c,
        alpha=args.alpha,
        base_temp=args.base_temp,
        ngram_order=args.ngram_order,
        epsilon_freq=eps,
        stage_order=args.order,
        top_k=args.top_k,
        top_p=args.top_p,
    )


def _build_provider(args, precision: int):
    if getattr(args, "bridge", None):
        spec = args.bridge
        if spec.startswith("tcp:"):
            _, host, port = spec.split(":")
            return BridgeProvider.tcp(host, int(port), precision)
        if spec.startswith("stdio:"):
            return BridgeProvider.stdio(spec[len("stdio:"):].split(), precision)
        raise CliError("bridge endpoint must be tcp:HOST:PORT or stdio:CMD...")
    if not getattr(args, "model", None):
        raise CliError("either --model or --bridge is required")
    return NGramProvider(NGramModel.load(args.model))


def _build_session(args, key: bytes, nonce: bytes) -> StegoSession:
    vocab = Vocabulary.load(args.vocab)
    target = FreqTable.load(args.target_freq)
    model_freq = FreqTable.load(args.model_freq)
    provider = _build_provider(args, args.precision)
    if provider.vocab_hash and provider.vocab_hash != vocab.content_hash:
        raise CliError(
            "provider vocabulary hash disagrees with --vocab", EXIT_HASH_MISMATCH
        )
    if provider.vocab_size != vocab.size:
        raise CliError("provider vocabulary size disagrees with --vocab")
    reform = ReformContext(
        target_freq=target,
        model_freq=model_freq,
        config=_reform_config(args),
        vocab_size=vocab.size,
    )
    stop_tokens = _resolve_stop_tokens(args, vocab)
    prompt = _resolve_prompt(args, vocab)
    return StegoSession(
        provider,
        reform,
        args.algo,
        key,
        nonce,
        precision=args.precision,
        prompt=prompt,
        max_len=args.max_len,
        stop_tokens=stop_tokens,
    )


def _resolve_stop_tokens(args, vocab: Vocabulary) -> list[int]:
    ids: list[int] = []
    for spec in args.stop_token or []:
        tok_id = vocab.id(spec, default=-1)
        if tok_id < 0:
            raise CliError(f"stop token {spec!r} not in vocabulary")
        ids.append(tok_id)
    if args.stop_ids:
        ids.extend(int(p) for p in args.stop_ids.split(","))
    return ids


def _resolve_prompt(args, vocab: Vocabulary) -> tuple[int, ...]:
    if args.prompt_ids:
        return tuple(int(p) for p in args.prompt_ids.split(","))
    if args.prompt:
        return tuple(tokenize(args.prompt, vocab, args.scheme))
    return ()


def _manifest_for(args, nonce: bytes) -> dict:
    vocab = Vocabulary.load(args.vocab)
    manifest = {
        "format": MANIFEST_FORMAT,
        "codec": args.algo,
        "precision": args.precision,
        "nonce": nonce.hex(),
        "scheme": args.scheme,
        "max_len": args.max_len,
        "prompt_ids": list(_resolve_prompt(args, vocab)),
        "stop_ids": _resolve_stop_tokens(args, vocab),
        "vocab": str(args.vocab),
        "vocab_hash": vocab.content_hash,
        "target_freq": str(args.target_freq),
        "target_freq_hash": FreqTable.load(args.target_freq).content_hash,
        "model_freq": str(args.model_freq),
        "model_freq_hash": FreqTable.load(args.model_freq).content_hash,
        "reform": {
            "theta": args.theta,
            "c": args.c,
            "alpha": args.alpha,
            "base_temp": args.base_temp,
            "ngram_order": args.ngram_order,
            "epsilon_freq": args.epsilon_freq or None,
            "order": args.order,
            "top_k": args.top_k,
            "top_p": args.top_p,
        },
    }
    if getattr(args, "bridge", None):
        manifest["provider"] = {"type": "bridge", "endpoint": args.bridge}
    else:
        manifest["provider"] = {
            "type": "ngram",
            "model": str(args.model),
            "model_hash": NGramModel.load(args.model).content_hash,
        }
    return manifest


def _verify_manifest(manifest: dict, base: Path, overrides) -> argparse.Namespace:
    """Rebuild session args from a manifest, checking artifact hashes."""

    def resolve(p: str) -> str:
        path = Path(p)
        return str(path if path.is_absolute() else base / path)

    ns = argparse.Namespace()
    ns.vocab = overrides.vocab or resolve(manifest["vocab"])
    ns.target_freq = overrides.target_freq or resolve(manifest["target_freq"])
    ns.model_freq = overrides.model_freq or resolve(manifest["model_freq"])
    checks = [
        (Vocabulary.load(ns.vocab).content_hash, manifest["vocab_hash"], "vocab"),
        (
            FreqTable.load(ns.target_freq).content_hash,
            manifest["target_freq_hash"],
            "target-freq",
        ),
        (
            FreqTable.load(ns.model_freq).content_hash,
            manifest["model_freq_hash"],
            "model-freq",
        ),
    ]
    provider = manifest["provider"]
    if provider["type"] == "ngram":
        ns.model = overrides.model or resolve(provider["model"])
        ns.bridge = None
        checks.append(
            (NGramModel.load(ns.model).content_hash, provider["model_hash"], "model")
        )
    else:
        ns.model = None
        ns.bridge = overrides.bridge or provider["endpoint"]
    for got, want, label in checks:
        if got != want:
            raise CliError(
                f"{label} hash mismatch: manifest pins {want}, file has {got}",
                EXIT_HASH_MISMATCH,
            )
    reform = manifest["reform"]
    ns.algo = manifest["codec"]
    ns.precision = manifest["precision"]
    ns.scheme = manifest["scheme"]
    ns.max_len = manifest["max_len"]
    ns.prompt = None
    ns.prompt_ids = ",".join(str(i) for i in manifest["prompt_ids"]) or None
    ns.stop_token = []
    ns.stop_ids = ",".join(str(i) for i in manifest["stop_ids"]) or None
    ns.theta = reform["theta"]
    ns.c = reform["c"]
    ns.alpha = reform["alpha"]
    ns.base_temp = reform["base_temp"]
    ns.ngram_order = reform["ngram_order"]
    ns.epsilon_freq = reform["epsilon_freq"]
    ns.order = reform["order"]
    ns.top_k = reform["top_k"]
    ns.top_p = reform["top_p"]
    return ns


def _write_stego(args, tokens: list[int], vocab: Vocabulary) -> None:
    if args.format == "ids":
        atomic_write_text(args.out, json.dumps({"v": 1, "tokens": tokens}) + "\n")
    else:
        atomic_write_text(args.out, detokenize(tokens, vocab, args.scheme) + "\n")


def _read_stego(path: str, vocab: Vocabulary, scheme: str) -> list[int]:
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        return [int(t) for t in json.loads(text)["tokens"]]
    return tokenize(text.strip("\n"), vocab, scheme)


def _write_record(path: str, record) -> None:
    payload = {
        "tokens": record.tokens,
        "bits_per_step": record.bits_per_step,
        "entropies": record.entropies,
        "temperatures": record.temperatures,
        "complete": record.complete,
        "total_bits": record.total_bits,
    }
    atomic_write_text(path, json.dumps(payload) + "\n")


def _emit(args, payload: dict) -> None:
    if getattr(args, "json", False):
        print(json.dumps({"v": 1, **payload}, sort_keys=True))
    else:
        for key, value in payload.items():
            print(f"{key}: {value}")


# ---------------------------------------------------------------------------
# subcommand implementations


def cmd_build_vocab(args) -> int:
    if args.scheme == "byte":
        vocab = Vocabulary.bytes_vocab()
    else:
        lines = Path(args.corpus).read_text(encoding="utf-8").splitlines()
        vocab = Vocabulary.build_whitespace(lines, args.max_size)
    vocab.save(args.out)
    _emit(args, {"out": args.out, "size": vocab.size, "hash": vocab.content_hash})
    return EXIT_OK


def cmd_build_freq(args) -> int:
    vocab = Vocabulary.load(args.vocab)
    streams = _read_corpus_streams(args.corpus, vocab, args.scheme)
    table = count_frequencies(streams, args.ngram_order, vocab.content_hash)
    table.save(args.out)
    _emit(
        args,
        {
            "out": args.out,
            "order": table.order,
            "total": table.total,
            "hash": table.content_hash,
        },
    )
    return EXIT_OK


def cmd_merge_freq(args) -> int:
    tables = [FreqTable.load(p) for p in args.inputs]
    merged = tables[0]
    for table in tables[1:]:
        merged = merge_frequencies(merged, table)
    merged.save(args.out)
    _emit(args, {"out": args.out, "total": merged.total, "hash": merged.content_hash})
    return EXIT_OK


def cmd_train_lm(args) -> int:
    vocab = Vocabulary.load(args.vocab)
    streams = _read_corpus_streams(args.corpus, vocab, args.scheme)
    model = train_ngram(
        streams,
        args.lm_order,
        Fraction(args.kappa),
        vocab_size=vocab.size,
        vocab_hash=vocab.content_hash,
    )
    model.save(args.out)
    _emit(args, {"out": args.out, "order": model.order, "hash": model.content_hash})
    return EXIT_OK


def cmd_encode(args) -> int:
    key = _load_key(args)
    nonce = bytes.fromhex(args.nonce) if args.nonce else secrets.token_bytes(16)
    payload = _load_message(args.msg)
    session = _build_session(args, key, nonce)
    result = encode_message(session, payload)
    vocab = Vocabulary.load(args.vocab)
    _write_stego(args, result.tokens, vocab)
    manifest = _manifest_for(args, nonce)
    manifest_path = args.manifest_out or args.out + ".manifest.json"
    atomic_write_text(manifest_path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    if args.record:
        _write_record(args.record, result.record)
    _emit(
        args,
        {
            "out": args.out,
            "manifest": manifest_path,
            "tokens": result.record.token_count,
            "bits_embedded": result.record.total_bits,
            "embedding_rate": round(result.record.embedding_rate, 6),
            "complete": result.record.complete,
        },
    )
    if not result.record.complete:
        print(
            f"error: only {result.record.total_bits} of "
            f"{32 + 8 * len(payload)} bits fit within max-len",
            file=sys.stderr,
        )
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_decode(args) -> int:
    key = _load_key(args)
    manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    if manifest.get("format") != MANIFEST_FORMAT:
        raise CliError("unrecognized manifest format")
    ns = _verify_manifest(manifest, Path(args.manifest).resolve().parent, args)
    nonce = bytes.fromhex(manifest["nonce"])
    session = _build_session(ns, key, nonce)
    vocab = Vocabulary.load(ns.vocab)
    tokens = _read_stego(args.stego, vocab, ns.scheme)
    result = decode_message(session, tokens)
    payload = result.payload
    if args.out:
        out_path = Path(args.out)
        tmp = out_path.with_name(out_path.name + ".tmp")
        tmp.write_bytes(payload.to_bytes())
        os.replace(tmp, out_path)
    _emit(
        args,
        {
            "bits": payload.length,
            "hex": payload.to_bytes().hex() if payload.length % 8 == 0 else None,
            "out": args.out,
        },
    )
    return EXIT_OK


def cmd_generate(args) -> int:
    key = _load_key(args)
    nonce = bytes.fromhex(args.nonce) if args.nonce else secrets.token_bytes(16)
    session = _build_session(args, key, nonce)
    tokens, record = generate_random(session, args.length)
    vocab = Vocabulary.load(args.vocab)
    _write_stego(args, tokens, vocab)
    if args.record:
        _write_record(args.record, record)
    _emit(args, {"out": args.out, "tokens": len(tokens), "nonce": nonce.hex()})
    return EXIT_OK


def cmd_evaluate(args) -> int:
    vocab = Vocabulary.load(args.vocab)
    streams = _read_corpus_streams(args.generated, vocab, args.scheme)
    target = FreqTable.load(args.target_freq)
    model = NGramModel.load(args.model) if args.model else None
    records = None
    if args.records:
        records = [_record_from_json(p) for p in args.records]
    report = build_report(
        streams, target, vocab.size, model=model, records=records
    )
    if args.json:
        print(report.to_json())
    else:
        print(report.to_table())
    if args.out:
        atomic_write_text(args.out, report.to_json() + "\n")
    return EXIT_OK


def _record_from_json(path: str):
    from .pipeline import GenerationRecord

    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return GenerationRecord(
        tokens=data["tokens"],
        bits_per_step=data["bits_per_step"],
        entropies=data["entropies"],
        temperatures=data["temperatures"],
        complete=data["complete"],
    )


def _sweep_cell(params: dict) -> dict:
    """One (alpha, c) grid cell; runs in a worker process."""
    ns = argparse.Namespace(**params["args"])
    ns.alpha = params["alpha"]
    ns.c = params["c"]
    key = bytes.fromhex(params["key"])
    er_values = []
    streams = []
    from .codecs import KeyStream  # session nonces derived per cell

    for i in range(params["sessions"]):
        nonce = bytes(
            KeyStream(key, b"sweep-nonce", f"{params['alpha']}:{params['c']}:{i}").bits(128).to_bytes(16, "big")
        )
        session = _build_session(ns, key, nonce)
        payload = bytes(
            KeyStream(key, b"sweep-msg", str(i)).bits(params["msg_bits"]).to_bytes(
                params["msg_bits"] // 8, "big"
            )
        )
        result = encode_message(session, payload)
        if result.record.complete:
            er_values.append(result.record.embedding_rate)
        streams.append(result.tokens)
    vocab_hash = Vocabulary.load(ns.vocab).content_hash
    gen_table = count_frequencies(streams, 1, vocab_hash)
    target = FreqTable.load(ns.target_freq)
    from .metrics import divergences, entropy_per_token

    tv, _ = divergences(gen_table, target, Vocabulary.load(ns.vocab).size)
    return {
        "alpha": params["alpha"],
        "c": params["c"],
        "sessions": params["sessions"],
        "er": sum(er_values) / len(er_values) if er_values else 0.0,
        "tv": tv,
    }


def cmd_sweep(args) -> int:
    key = _load_key(args)
    alphas = [float(a) for a in args.alphas.split(",")]
    cs = [float(c) for c in args.cs.split(",")]
    base_args = {
        k: getattr(args, k)
        for k in (
            "vocab",
            "target_freq",
            "model_freq",
            "model",
            "bridge",
            "algo",
            "precision",
            "scheme",
            "max_len",
            "prompt",
            "prompt_ids",
            "stop_token",
            "stop_ids",
            "theta",
            "base_temp",
            "ngram_order",
            "epsilon_freq",
            "order",
            "top_k",
            "top_p",
        )
    }
    cells = [
        {
            "args": base_args,
            "alpha": alpha,
            "c": c,
            "key": key.hex(),
            "sessions": args.sessions,
            "msg_bits": args.msg_bits,
        }
        for alpha in alphas
        for c in cs
    ]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_sweep_cell, cells))
    else:
        rows = [_sweep_cell(cell) for cell in cells]
    lines = ["alpha,c,sessions,er,tv"]
    lines.extend(
        f"{r['alpha']},{r['c']},{r['sessions']},{r['er']:.6f},{r['tv']:.6f}"
        for r in rows
    )
    atomic_write_text(args.out, "\n".join(lines) + "\n")
    _emit(args, {"out": args.out, "cells": len(rows)})
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument wiring


def _add_reform_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--theta", type=float, default=0.01)
    p.add_argument("--c", type=float, default=0.1)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--base-temp", type=float, default=1.0, dest="base_temp")
    p.add_argument("--ngram-order", type=int, default=1, dest="ngram_order")
    p.add_argument("--epsilon-freq", default=None, dest="epsilon_freq")
    p.add_argument("--order", choices=("ta-sa", "sa-ta"), default="ta-sa")
    p.add_argument("--top-k", type=int, default=None, dest="top_k")
    p.add_argument("--top-p", type=float, default=1.0, dest="top_p")


def _add_session_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--vocab", required=True)
    p.add_argument("--target-freq", required=True, dest="target_freq")
    p.add_argument("--model-freq", required=True, dest="model_freq")
    p.add_argument("--model", default=None)
    p.add_argument("--bridge", default=None)
    p.add_argument("--algo", choices=CODEC_NAMES, default="discop")
    p.add_argument("--precision", type=int, default=DEFAULT_PRECISION)
    p.add_argument("--key", default=None)
    p.add_argument("--scheme", choices=("whitespace", "byte"), default="whitespace")
    p.add_argument("--prompt", default=None)
    p.add_argument("--prompt-ids", default=None, dest="prompt_ids")
    p.add_argument("--stop-token", action="append", dest="stop_token")
    p.add_argument("--stop-ids", default=None, dest="stop_ids")
    p.add_argument("--max-len", type=int, default=10_000, dest="max_len")
    _add_reform_flags(p)


def _apply_config_file(argv: list[str]) -> list[str]:
    """Fold `key = value` lines from --config into the argument list."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    path = argv[idx + 1]
    rest = argv[:idx] + argv[idx + 2 :]
    extra: list[str] = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition("=")
        flag = "--" + key.strip().replace("_", "-")
        extra.extend([flag, value.strip()])
    # config values go first so explicit flags override them
    return rest[:1] + extra + rest[1:]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stegalign",
        description="embed and recover bit streams in generated text",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-vocab", help="build a vocabulary file from a corpus")
    p.add_argument("--corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--max-size", type=int, default=None, dest="max_size")
    p.add_argument("--scheme", choices=("whitespace", "byte"), default="whitespace")
    p.set_defaults(func=cmd_build_vocab)

    p = sub.add_parser("build-freq", help="count n-gram frequencies of a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--ngram-order", type=int, default=1, dest="ngram_order")
    p.add_argument("--scheme", choices=("whitespace", "byte"), default="whitespace")
    p.set_defaults(func=cmd_build_freq)

    p = sub.add_parser("merge-freq", help="merge frequency tables")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_merge_freq)

    p = sub.add_parser("train-lm", help="train the built-in n-gram model")
    p.add_argument("--corpus", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lm-order", type=int, default=3, dest="lm_order")
    p.add_argument("--kappa", default="1")
    p.add_argument("--scheme", choices=("whitespace", "byte"), default="whitespace")
    p.set_defaults(func=cmd_train_lm)

    p = sub.add_parser("encode", help="embed a message into generated text")
    _add_session_flags(p)
    p.add_argument("--msg", required=True, help="hex string or @file")
    p.add_argument("--nonce", default=None, help="hex; autogenerated when omitted")
    p.add_argument("--out", required=True)
    p.add_argument("--manifest-out", default=None, dest="manifest_out")
    p.add_argument("--record", default=None)
    p.add_argument("--format", choices=("text", "ids"), default="ids")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="recover a message from stegotext")
    p.add_argument("--manifest", required=True)
    p.add_argument("--stego", required=True)
    p.add_argument("--key", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--vocab", default=None)
    p.add_argument("--target-freq", default=None, dest="target_freq")
    p.add_argument("--model-freq", default=None, dest="model_freq")
    p.add_argument("--model", default=None)
    p.add_argument("--bridge", default=None)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("generate", help="keyed random sampling (cover baseline)")
    _add_session_flags(p)
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--nonce", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--record", default=None)
    p.add_argument("--format", choices=("text", "ids"), default="ids")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="metric report for a generated corpus")
    p.add_argument("--generated", required=True)
    p.add_argument("--target-freq", required=True, dest="target_freq")
    p.add_argument("--vocab", required=True)
    p.add_argument("--model", default=None)
    p.add_argument("--records", nargs="*", default=None)
    p.add_argument("--scheme", choices=("whitespace", "byte"), default="whitespace")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="grid sweep over alpha and c")
    _add_session_flags(p)
    p.add_argument("--alphas", required=True)
    p.add_argument("--cs", required=True)
    p.add_argument("--sessions", type=int, default=20)
    p.add_argument("--msg-bits", type=int, default=128, dest="msg_bits")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    for sp in sub.choices.values():
        sp.add_argument("--json", action="store_true")
        sp.add_argument("--config", default=None, help="key=value config file")

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    argv = _apply_config_file(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except DesyncError as exc:
        print(f"desync: {exc}", file=sys.stderr)
        return EXIT_DESYNC
    except BridgeError as exc:
        print(f"bridge failure: {exc}", file=sys.stderr)
        return EXIT_DESYNC
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

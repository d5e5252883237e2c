"""Vocabularies, n-gram frequency tables, and the built-in language model.

The built-in channel model is an additive-smoothed n-gram model kept in
exact rational arithmetic: receivers must rebuild the sender's per-step
distributions bit for bit, and rationals make that property independent
of platform and load order. Unseen contexts back off straight to the
uniform distribution; both ends apply the same rule.
"""

from __future__ import annotations

import hashlib
import os
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

UNK_TOKEN = "<unk>"
UNK_ID = 0

_BYTE_TOKENS = tuple(f"0x{b:02x}" for b in range(256))


def _escape(token: str) -> str:
    return (
        token.replace("\\", "\\\\")
        .replace("\n", "\\n")
        .replace("\t", "\\t")
        .replace("\r", "\\r")
    )


def _unescape(text: str) -> str:
    out = []
    it = iter(text)
    for ch in it:
        if ch != "\\":
            out.append(ch)
            continue
        nxt = next(it, "")
        out.append({"n": "\n", "t": "\t", "r": "\r", "\\": "\\"}.get(nxt, nxt))
    return "".join(out)


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write-then-rename so failures never leave partial files behind."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def sha256_text(text: str) -> str:
    return "sha256:" + hashlib.sha256(text.encode("utf-8")).hexdigest()


class Vocabulary:
    """Bijection between token strings and dense ids, UNK pinned at id 0."""

    __slots__ = ("tokens", "_ids")

    def __init__(self, tokens: Sequence[str]):
        tokens = tuple(tokens)
        if not tokens or tokens[0] != UNK_TOKEN:
            raise ValueError(f"vocabulary must start with {UNK_TOKEN!r} at id 0")
        ids = {tok: i for i, tok in enumerate(tokens)}
        if len(ids) != len(tokens):
            raise ValueError("vocabulary contains duplicate tokens")
        self.tokens = tokens
        self._ids = ids

    @property
    def size(self) -> int:
        return len(self.tokens)

    def id(self, token: str, default: int = UNK_ID) -> int:
        return self._ids.get(token, default)

    def token(self, token_id: int) -> str:
        return self.tokens[token_id]

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    @classmethod
    def build_whitespace(cls, lines: Iterable[str], max_size: int | None = None) -> "Vocabulary":
        """Vocabulary from a text corpus, ordered by count then spelling."""
        counts: Counter[str] = Counter()
        for line in lines:
            counts.update(line.split())
        counts.pop(UNK_TOKEN, None)
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        if max_size is not None:
            ranked = ranked[: max_size - 1]
        return cls((UNK_TOKEN,) + tuple(tok for tok, _ in ranked))

    @classmethod
    def bytes_vocab(cls) -> "Vocabulary":
        """Fixed 257-entry vocabulary for the lossless byte scheme."""
        return cls((UNK_TOKEN,) + _BYTE_TOKENS)

    def dumps(self) -> str:
        return "\n".join(_escape(tok) for tok in self.tokens) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Vocabulary":
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        return cls(tuple(_unescape(line) for line in lines))

    def save(self, path: str | Path) -> None:
        atomic_write_text(path, self.dumps())

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        return cls.loads(Path(path).read_text(encoding="utf-8"))

    @property
    def content_hash(self) -> str:
        return sha256_text(self.dumps())


def tokenize(text: str, vocab: Vocabulary, scheme: str = "whitespace") -> list[int]:
    """Map text to token ids; unknown words map to the reserved UNK id."""
    if scheme == "whitespace":
        return [vocab.id(tok) for tok in text.split()]
    if scheme == "byte":
        return [b + 1 for b in text.encode("utf-8")]
    raise ValueError(f"unknown tokenization scheme {scheme!r}")


def detokenize(ids: Sequence[int], vocab: Vocabulary, scheme: str = "whitespace"):
    if scheme == "whitespace":
        return " ".join(vocab.token(i) for i in ids)
    if scheme == "byte":
        if any(i == UNK_ID for i in ids):
            raise ValueError("byte scheme has no UNK tokens")
        return bytes(i - 1 for i in ids)
    raise ValueError(f"unknown tokenization scheme {scheme!r}")


def _key_to_str(key) -> str:
    if isinstance(key, tuple):
        return ",".join(str(i) for i in key)
    return str(key)


def _key_from_str(text: str, order: int):
    if order == 1:
        return int(text)
    return tuple(int(p) for p in text.split(","))


@dataclass(frozen=True)
class FreqTable:
    """n-gram counts of a corpus; keys are ids (order 1) or id tuples."""

    counts: Mapping
    order: int
    vocab_hash: str = ""
    total: int = field(init=False)

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("ngram order must be >= 1")
        for key, cnt in self.counts.items():
            if cnt < 0:
                raise ValueError(f"negative count for {key!r}")
        object.__setattr__(self, "total", sum(self.counts.values()))

    def count(self, key) -> int:
        return self.counts.get(key, 0)

    def frequency(self, key) -> Fraction:
        if self.total == 0:
            return Fraction(0)
        return Fraction(self.counts.get(key, 0), self.total)

    def dumps(self) -> str:
        header = (
            f"#stegalign-freq\tv1\torder={self.order}"
            f"\ttotal={self.total}\tvocab={self.vocab_hash or '-'}"
        )
        rows = sorted(self.counts.items(), key=lambda kv: _sort_key(kv[0]))
        lines = [header]
        lines.extend(f"{_key_to_str(k)}\t{c}" for k, c in rows if c > 0)
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "FreqTable":
        lines = text.strip("\n").split("\n")
        head = lines[0].split("\t")
        if not head or head[0] != "#stegalign-freq" or head[1] != "v1":
            raise ValueError("not a stegalign frequency table")
        fields = dict(part.split("=", 1) for part in head[2:])
        order = int(fields["order"])
        vocab_hash = fields.get("vocab", "-")
        vocab_hash = "" if vocab_hash == "-" else vocab_hash
        counts: dict = {}
        for line in lines[1:]:
            if not line:
                continue
            key_s, cnt_s = line.split("\t")
            counts[_key_from_str(key_s, order)] = int(cnt_s)
        table = cls(counts=counts, order=order, vocab_hash=vocab_hash)
        if table.total != int(fields["total"]):
            raise ValueError("frequency table total does not match its header")
        return table

    def save(self, path: str | Path) -> None:
        atomic_write_text(path, self.dumps())

    @classmethod
    def load(cls, path: str | Path) -> "FreqTable":
        return cls.loads(Path(path).read_text(encoding="utf-8"))

    @property
    def content_hash(self) -> str:
        return sha256_text(self.dumps())


def _sort_key(key):
    return key if isinstance(key, tuple) else (key,)


def count_frequencies(
    token_streams: Sequence[Sequence[int]], n: int, vocab_hash: str = ""
) -> FreqTable:
    """Count n-grams across streams in a single pass."""
    if n < 1:
        raise ValueError("ngram order must be >= 1")
    counts: Counter = Counter()
    if n == 1:
        for stream in token_streams:
            counts.update(stream)
    else:
        for stream in token_streams:
            if len(stream) < n:
                continue
            counts.update(zip(*(stream[i:] for i in range(n))))
    return FreqTable(counts=dict(counts), order=n, vocab_hash=vocab_hash)


def merge_frequencies(a: FreqTable, b: FreqTable) -> FreqTable:
    """Pointwise sum; requires matching order and vocabulary."""
    if a.order != b.order:
        raise ValueError(f"order mismatch: {a.order} != {b.order}")
    if a.vocab_hash and b.vocab_hash and a.vocab_hash != b.vocab_hash:
        raise ValueError("vocabulary mismatch between frequency tables")
    merged = Counter(a.counts)
    merged.update(b.counts)
    return FreqTable(
        counts=dict(merged), order=a.order, vocab_hash=a.vocab_hash or b.vocab_hash
    )


@dataclass
class NGramModel:
    """Additive-smoothed n-gram model in exact rational arithmetic."""

    order: int
    kappa: Fraction
    vocab_size: int
    vocab_hash: str = ""
    context_counts: dict = field(default_factory=dict)
    context_totals: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("model order must be >= 1")
        if self.kappa <= 0:
            raise ValueError("smoothing constant must be > 0")

    def context_key(self, history: Sequence[int]) -> tuple[int, ...]:
        if self.order == 1:
            return ()
        return tuple(history[-(self.order - 1):]) if self.order > 1 else ()

    def prob(self, history: Sequence[int], token: int) -> Fraction:
        ctx = self.context_key(history)
        counts = self.context_counts.get(ctx)
        if counts is None:
            return Fraction(1, self.vocab_size)
        num = Fraction(counts.get(token, 0)) + self.kappa
        den = Fraction(self.context_totals[ctx]) + self.kappa * self.vocab_size
        return num / den

    def distribution(self, history: Sequence[int]) -> list[Fraction]:
        """Exact next-token distribution; sums to 1 as a rational."""
        ctx = self.context_key(history)
        counts = self.context_counts.get(ctx)
        if counts is None:
            return [Fraction(1, self.vocab_size)] * self.vocab_size
        kn, kd = self.kappa.numerator, self.kappa.denominator
        den = self.context_totals[ctx] * kd + kn * self.vocab_size
        return [
            Fraction(counts.get(tok, 0) * kd + kn, den)
            for tok in range(self.vocab_size)
        ]

    def dumps(self) -> str:
        header = (
            f"#stegalign-ngram\tv1\torder={self.order}\tkappa={self.kappa}"
            f"\tvocab_size={self.vocab_size}\tvocab={self.vocab_hash or '-'}"
        )
        lines = [header]
        for ctx in sorted(self.context_counts):
            ctx_s = ",".join(str(i) for i in ctx) if ctx else "-"
            counts = self.context_counts[ctx]
            for tok in sorted(counts):
                lines.append(f"{ctx_s}\t{tok}\t{counts[tok]}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "NGramModel":
        lines = text.strip("\n").split("\n")
        head = lines[0].split("\t")
        if not head or head[0] != "#stegalign-ngram" or head[1] != "v1":
            raise ValueError("not a stegalign ngram model")
        fields = dict(part.split("=", 1) for part in head[2:])
        vocab_hash = fields.get("vocab", "-")
        model = cls(
            order=int(fields["order"]),
            kappa=Fraction(fields["kappa"]),
            vocab_size=int(fields["vocab_size"]),
            vocab_hash="" if vocab_hash == "-" else vocab_hash,
        )
        for line in lines[1:]:
            if not line:
                continue
            ctx_s, tok_s, cnt_s = line.split("\t")
            ctx = () if ctx_s == "-" else tuple(int(p) for p in ctx_s.split(","))
            model.context_counts.setdefault(ctx, {})[int(tok_s)] = int(cnt_s)
        model.context_totals = {
            ctx: sum(c.values()) for ctx, c in model.context_counts.items()
        }
        return model

    def save(self, path: str | Path) -> None:
        atomic_write_text(path, self.dumps())

    @classmethod
    def load(cls, path: str | Path) -> "NGramModel":
        return cls.loads(Path(path).read_text(encoding="utf-8"))

    @property
    def content_hash(self) -> str:
        return sha256_text(self.dumps())


def train_ngram(
    token_streams: Sequence[Sequence[int]],
    order: int,
    kappa: Fraction | int = 1,
    vocab_size: int | None = None,
    vocab_hash: str = "",
) -> NGramModel:
    """Fit the additive-smoothed model; an empty corpus yields uniform."""
    if vocab_size is None:
        vocab_size = 1 + max(
            (max(s) for s in token_streams if s), default=UNK_ID
        )
    model = NGramModel(
        order=order,
        kappa=Fraction(kappa),
        vocab_size=vocab_size,
        vocab_hash=vocab_hash,
    )
    for stream in token_streams:
        for i in range(len(stream) - order + 1):
            ctx = tuple(stream[i : i + order - 1])
            tok = stream[i + order - 1]
            bucket = model.context_counts.setdefault(ctx, {})
            bucket[tok] = bucket.get(tok, 0) + 1
            model.context_totals[ctx] = model.context_totals.get(ctx, 0) + 1
    return model

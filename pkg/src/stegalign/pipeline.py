"""End-to-end embedding and recovery sessions.

Sender and receiver construct sessions from identical artifacts (key,
model, frequency tables, config) and replay the same per-step
computation: provider logits -> reshaped distribution -> integer
quantization -> codec step. Every step distribution is a pure function
of the trailing context, so steps are memoized; an optional digest log
records each quantized distribution for cross-end conformance checks.

Stop handling: a session ends at a configured stop token or max_len.
While the header+payload is not fully embedded, stop tokens are
suppressed (their weight reassigned proportionally) so the message
cannot be cut short; if no stop tokens are configured the session ends
as soon as the message is through. Running out of max_len first yields
an explicit partial result, never a silent truncation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .codecs import (
    Bits,
    BitSink,
    DesyncError,
    KeyStream,
    MessageReader,
    StepDist,
    make_decoder,
    make_encoder,
)
from .lm import NEG_LOGIT
from .quantize import DEFAULT_PRECISION, quantize, redistribute
from .reformer import ReformContext, reform_step_full

_MASK_DOMAIN = "mask"
_PAD_DOMAIN = "pad"


class PartialEmbedError(RuntimeError):
    """Raised by strict callers when a message did not fit."""


@dataclass
class GenerationRecord:
    """Per-step log of one session."""

    tokens: list[int] = field(default_factory=list)
    bits_per_step: list[int] = field(default_factory=list)
    entropies: list[float] = field(default_factory=list)
    temperatures: list[float] = field(default_factory=list)
    complete: bool = True
    dist_digests: list[str] | None = None

    @property
    def total_bits(self) -> int:
        return sum(self.bits_per_step)

    @property
    def token_count(self) -> int:
        return len(self.tokens)

    @property
    def embedding_rate(self) -> float:
        return self.total_bits / self.token_count if self.tokens else 0.0


@dataclass
class EncodeResult:
    tokens: list[int]
    record: GenerationRecord


@dataclass
class DecodeResult:
    payload: Bits
    record: GenerationRecord


class StegoSession:
    """Everything Encode and Decode must share, plus the step cache."""

    def __init__(
        self,
        provider,
        reform: ReformContext,
        codec: str,
        key: bytes,
        nonce: bytes,
        *,
        precision: int = DEFAULT_PRECISION,
        prompt: Sequence[int] = (),
        max_len: int = 10_000,
        stop_tokens: Sequence[int] = (),
        log_digests: bool = False,
        dist_cache: dict | None = None,
    ):
        if provider.vocab_size != reform.vocab_size:
            raise ValueError("provider and reform context disagree on vocabulary size")
        from .quantize import MAX_PRECISION, MIN_PRECISION

        if not MIN_PRECISION <= precision <= MAX_PRECISION:
            raise ValueError(
                f"session precision must be in [{MIN_PRECISION}, {MAX_PRECISION}]"
            )
        self.provider = provider
        self.reform = reform
        self.codec = codec
        self.key = key
        self.nonce = nonce
        self.precision = precision
        self.prompt = tuple(prompt)
        self.max_len = max_len
        self.stop_tokens = frozenset(stop_tokens)
        self.log_digests = log_digests
        self._cache = dist_cache if dist_cache is not None else {}
        reform_tail = reform.config.ngram_order - 1
        provider_tail = provider.context_len
        self._tail_len = (
            None if provider_tail is None else max(provider_tail, reform_tail)
        )

    def _tail(self, history: tuple[int, ...]) -> tuple[int, ...]:
        if self._tail_len is None:
            return history
        return history[-self._tail_len:] if self._tail_len else ()

    def step_dist(self, history: tuple[int, ...], suppress_stops: bool):
        """Memoized reshaped+quantized distribution for this context."""
        key = (self._tail(history), suppress_stops)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        logits = self.provider.log_probs(history)
        support = logits > NEG_LOGIT / 2
        reformed = reform_step_full(logits, self.reform, history, support)
        q = quantize(reformed.probs, self.precision)
        if suppress_stops:
            q = redistribute(q, sorted(self.stop_tokens))
        entry = (StepDist(q), reformed.entropy, reformed.temp)
        self._cache[key] = entry
        return entry


def _new_record(session: StegoSession) -> GenerationRecord:
    return GenerationRecord(dist_digests=[] if session.log_digests else None)


def _log_step(record: GenerationRecord, sd: StepDist, token: int, bits: int,
              entropy: float, temp: float) -> None:
    record.tokens.append(token)
    record.bits_per_step.append(bits)
    record.entropies.append(entropy)
    record.temperatures.append(temp)
    if record.dist_digests is not None:
        record.dist_digests.append(sd.q.digest())


def encode_message(session: StegoSession, payload: Bits | bytes) -> EncodeResult:
    """Embed header+payload into generated tokens.

    The result's record carries `complete=False` when max_len ran out
    first (for example under a zero-entropy provider); the stegotext is
    still returned so callers can inspect it.
    """
    if isinstance(payload, (bytes, bytearray)):
        payload = Bits.from_bytes(bytes(payload))
    mask = KeyStream(session.key, session.nonce, _MASK_DOMAIN)
    pad = KeyStream(session.key, session.nonce, _PAD_DOMAIN)
    msg = MessageReader(payload, pad)
    codec = make_encoder(
        session.codec, mask=mask, msg=msg, precision=session.precision
    )
    record = _new_record(session)
    history = session.prompt
    while len(record.tokens) < session.max_len:
        done_before = codec.embedded >= msg.real_bits
        suppress = bool(session.stop_tokens) and not done_before
        sd, entropy, temp = session.step_dist(history, suppress)
        res = codec.encode_step(sd, msg)
        history = history + (res.token,)
        _log_step(record, sd, res.token, res.bits_embedded, entropy, temp)
        if codec.embedded >= msg.real_bits:
            if not session.stop_tokens or res.token in session.stop_tokens:
                break
    record.complete = codec.embedded >= msg.real_bits
    return EncodeResult(tokens=record.tokens, record=record)


def decode_message(session: StegoSession, tokens: Sequence[int]) -> DecodeResult:
    """Recover the payload by replaying the per-step distributions.

    Raises DesyncError with the failing step index when the received
    token cannot have been produced by the mirrored computation, or
    when the stegotext ends before the message is complete.
    """
    mask = KeyStream(session.key, session.nonce, _MASK_DOMAIN)
    codec = make_decoder(session.codec, mask=mask, precision=session.precision)
    sink = BitSink()
    record = _new_record(session)
    history = session.prompt
    for step, token in enumerate(tokens):
        done_before = sink.complete
        suppress = bool(session.stop_tokens) and not done_before
        sd, entropy, temp = session.step_dist(history, suppress)
        try:
            value, nbits = codec.decode_step(sd, token)
        except DesyncError as exc:
            raise DesyncError(str(exc), step=step) from None
        sink.append(value, nbits)
        history = history + (int(token),)
        _log_step(record, sd, int(token), nbits, entropy, temp)
    if not sink.complete:
        have = sink.count
        raise DesyncError(
            f"stegotext ended after {len(tokens)} tokens with only {have} "
            "bits recovered; message incomplete",
            step=len(tokens),
        )
    return DecodeResult(payload=sink.payload(), record=record)


def generate_random(session: StegoSession, length: int) -> tuple[list[int], GenerationRecord]:
    """Keyed random sampling from the reshaped distributions.

    The cover baseline: a uniform keystream pointer falls into a
    token's cumulative interval, so tokens appear with probability
    weight / 2^P exactly.
    """
    mask = KeyStream(session.key, session.nonce, _MASK_DOMAIN)
    record = _new_record(session)
    history = session.prompt
    for _ in range(length):
        sd, entropy, temp = session.step_dist(history, False)
        r = mask.bits(session.precision)
        token = int(sd.support[sd.locate(r)])
        history = history + (token,)
        _log_step(record, sd, token, 0, entropy, temp)
        if token in session.stop_tokens:
            break
    return record.tokens, record

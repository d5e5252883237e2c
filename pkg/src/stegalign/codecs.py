"""Stego codecs: keyed bit source, bit plumbing, and four samplers.

Each codec maps (integer step distribution, message bits, keystream) to
a token on encode and mirrors the computation on decode. Token
intervals are laid out in ascending id order for the interval codecs;
the grouping codec sorts by descending weight with ascending-id
tie-breaks. These layout choices are part of the wire contract.

The arithmetic codec is unkeyed (message bits drive the interval walk
directly); the other three consume the shared keystream and are
undecodable without the key.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .quantize import QuantDist, cumulative


class DesyncError(RuntimeError):
    """Sender/receiver distributions diverged; decoding is impossible."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step


@dataclass(frozen=True)
class StepResult:
    token: int
    bits_embedded: int


class Bits:
    """Immutable bit string (MSB-first) with byte/hex conversions."""

    __slots__ = ("value", "length")

    def __init__(self, value: int = 0, length: int = 0):
        if length < 0 or value < 0 or value >> length:
            raise ValueError("value does not fit in length bits")
        self.value = value
        self.length = length

    @classmethod
    def from_bytes(cls, data: bytes) -> "Bits":
        return cls(int.from_bytes(data, "big"), 8 * len(data))

    @classmethod
    def from_hex(cls, text: str) -> "Bits":
        return cls.from_bytes(bytes.fromhex(text))

    @classmethod
    def from01(cls, text: str) -> "Bits":
        return cls(int(text, 2) if text else 0, len(text))

    def to_bytes(self) -> bytes:
        if self.length % 8:
            raise ValueError("bit length is not a whole number of bytes")
        return self.value.to_bytes(self.length // 8, "big")

    def to01(self) -> str:
        return format(self.value, f"0{self.length}b") if self.length else ""

    def prefix(self, n: int) -> "Bits":
        if n > self.length:
            raise ValueError("prefix longer than bit string")
        return Bits(self.value >> (self.length - n), n)

    def __add__(self, other: "Bits") -> "Bits":
        return Bits((self.value << other.length) | other.value, self.length + other.length)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Bits)
            and self.length == other.length
            and self.value == other.value
        )

    def __hash__(self):
        return hash((self.value, self.length))

    def __len__(self) -> int:
        return self.length

    def __repr__(self) -> str:
        return f"Bits({self.to01()!r})"


class KeyStream:
    """Keyed deterministic bit stream (BLAKE2b in counter mode).

    Identical (key, nonce, domain) produce identical streams on both
    ends; distinct domains give independent streams from one key.
    """

    BLOCK_BYTES = 64

    def __init__(self, key: bytes, nonce: bytes, domain: str):
        if len(key) != 32:
            raise ValueError("key must be 32 bytes")
        self._key = key
        self._prefix = nonce + b"|" + domain.encode("utf-8") + b"|"
        self._counter = 0
        self._buf = 0
        self._buf_bits = 0

    def _refill(self) -> None:
        block = hashlib.blake2b(
            self._prefix + self._counter.to_bytes(8, "big"),
            key=self._key,
            digest_size=self.BLOCK_BYTES,
        ).digest()
        self._counter += 1
        self._buf = (self._buf << (8 * self.BLOCK_BYTES)) | int.from_bytes(block, "big")
        self._buf_bits += 8 * self.BLOCK_BYTES

    def bits(self, n: int) -> int:
        """Next n bits as an MSB-first integer."""
        if n < 0:
            raise ValueError("bit count must be >= 0")
        while self._buf_bits < n:
            self._refill()
        self._buf_bits -= n
        out = self._buf >> self._buf_bits
        self._buf &= (1 << self._buf_bits) - 1
        return out

    def bit_list(self, n: int) -> list[int]:
        v = self.bits(n)
        return [(v >> (n - 1 - i)) & 1 for i in range(n)]


HEADER_BITS = 32


class MessageReader:
    """Header + payload bits, padded past the end by a keyed stream.

    The 32-bit header carries the payload length in bits so the
    receiver knows where real content stops; padding lets generation
    run on to a natural stopping point.
    """

    def __init__(self, payload: Bits, pad: KeyStream):
        if payload.length >= 1 << HEADER_BITS:
            raise ValueError("payload too long for 32-bit header")
        self._buf = Bits(payload.length, HEADER_BITS) + payload
        self._pad = pad
        self._cursor = 0
        self.real_bits = HEADER_BITS + payload.length

    def _ensure(self, end: int) -> None:
        if end > self._buf.length:
            need = end - self._buf.length
            self._buf = self._buf + Bits(self._pad.bits(need), need)

    def peek(self, n: int) -> int:
        self._ensure(self._cursor + n)
        shift = self._buf.length - self._cursor - n
        return (self._buf.value >> shift) & ((1 << n) - 1)

    def read(self, n: int) -> int:
        out = self.peek(n)
        self._cursor += n
        return out

    def read_bit(self) -> int:
        return self.read(1)

    def skip(self, n: int) -> None:
        self._ensure(self._cursor + n)
        self._cursor += n

    @property
    def consumed(self) -> int:
        return self._cursor


class BitSink:
    """Accumulates recovered bits; parses the length header on the fly."""

    def __init__(self):
        self._value = 0
        self.count = 0

    def append(self, value: int, nbits: int) -> None:
        if nbits:
            self._value = (self._value << nbits) | value
            self.count += nbits

    @property
    def payload_length(self) -> int | None:
        """Payload bit length once the header is complete, else None."""
        if self.count < HEADER_BITS:
            return None
        return (self._value >> (self.count - HEADER_BITS)) & ((1 << HEADER_BITS) - 1)

    @property
    def target_bits(self) -> int | None:
        n = self.payload_length
        return None if n is None else HEADER_BITS + n

    @property
    def complete(self) -> bool:
        t = self.target_bits
        return t is not None and self.count >= t

    def payload(self) -> Bits:
        if not self.complete:
            raise ValueError("message is not fully recovered")
        n = self.payload_length
        assert n is not None
        drop = self.count - HEADER_BITS - n
        value = (self._value >> drop) & ((1 << n) - 1) if n else 0
        return Bits(value, n)


class StepDist:
    """Step distribution prepared for codec arithmetic."""

    __slots__ = ("q", "support", "weights", "cum", "precision", "_adg_tree")

    def __init__(self, q: QuantDist):
        self.q = q
        self.support = q.support
        self.weights = q.weights[q.support]
        self.cum = cumulative(q)
        self.precision = q.precision
        self._adg_tree = None

    def locate(self, point: int) -> int:
        """Support index of the interval [cum[i-1], cum[i]) holding point."""
        return int(np.searchsorted(self.cum, point, side="right"))

    def interval(self, sup_idx: int) -> tuple[int, int]:
        lo = 0 if sup_idx == 0 else int(self.cum[sup_idx - 1])
        return lo, int(self.cum[sup_idx])

    def support_index(self, token: int) -> int:
        idx = int(np.searchsorted(self.support, token))
        if idx >= self.support.size or self.support[idx] != token:
            raise DesyncError(f"token {token} is outside the step support")
        return idx

    @property
    def adg_tree(self) -> "_AdgTree":
        if self._adg_tree is None:
            self._adg_tree = _AdgTree(self)
        return self._adg_tree


# ---------------------------------------------------------------------------
# METEOR-style masked interval codec


class MeteorCodec:
    """Masks message bits with the keystream, then embeds the common
    binary prefix of the selected token's interval."""

    name = "meteor"
    uses_key = True

    def __init__(self, mask: KeyStream, precision: int):
        self.mask = mask
        self.precision = precision
        self.embedded = 0

    def encode_step(self, sd: StepDist, msg: MessageReader) -> StepResult:
        p = self.precision
        r = msg.peek(p) ^ self.mask.bits(p)
        idx = sd.locate(r)
        lo, hi = sd.interval(idx)
        k = p - (lo ^ (hi - 1)).bit_length()
        msg.skip(k)
        self.embedded += k
        return StepResult(int(sd.support[idx]), k)

    def decode_step(self, sd: StepDist, token: int) -> tuple[int, int]:
        p = self.precision
        mask_bits = self.mask.bits(p)
        idx = sd.support_index(token)
        lo, hi = sd.interval(idx)
        k = p - (lo ^ (hi - 1)).bit_length()
        if k == 0:
            self.embedded += 0
            return 0, 0
        recovered = (lo >> (p - k)) ^ (mask_bits >> (p - k))
        self.embedded += k
        return recovered, k


# ---------------------------------------------------------------------------
# DISCOP-style distribution-copy codec


class DiscopCodec:
    """Shifted copies of a keyed uniform pointer; the message picks the
    copy. Capacity at a step is the largest n with 2^n distinct hits."""

    name = "discop"
    uses_key = True

    def __init__(self, mask: KeyStream, precision: int):
        self.mask = mask
        self.precision = precision
        self.embedded = 0

    def _capacity(self, sd: StepDist, r: int) -> int:
        p = self.precision
        size = 1 << p
        n = 0
        while True:
            nn = n + 1
            step = 1 << (p - nn)
            pts = (r + step * np.arange(1 << nn, dtype=np.int64)) & (size - 1)
            hits = np.searchsorted(sd.cum, pts, side="right")
            if np.unique(hits).size != pts.size:
                return n
            n = nn
            if n == p:
                return n

    def encode_step(self, sd: StepDist, msg: MessageReader) -> StepResult:
        p = self.precision
        r = self.mask.bits(p)
        n = self._capacity(sd, r)
        i = msg.read(n) if n else 0
        point = (r + i * (1 << (p - n))) & ((1 << p) - 1)
        idx = sd.locate(point)
        self.embedded += n
        return StepResult(int(sd.support[idx]), n)

    def decode_step(self, sd: StepDist, token: int) -> tuple[int, int]:
        p = self.precision
        r = self.mask.bits(p)
        n = self._capacity(sd, r)
        sup_idx = sd.support_index(token)
        if n == 0:
            if sd.locate(r) != sup_idx:
                raise DesyncError(f"pointer misses received token {token}")
            return 0, 0
        lo, hi = sd.interval(sup_idx)
        step = 1 << (p - n)
        mask = (1 << p) - 1
        for i in range(1 << n):
            if lo <= (r + i * step) & mask < hi:
                self.embedded += n
                return i, n
        raise DesyncError(f"no pointer lands in the interval of token {token}")


# ---------------------------------------------------------------------------
# ADG-style balanced-grouping codec


class _AdgTree:
    """Recursive near-equal bipartition of the support by weight.

    Tokens are taken in descending weight (ascending id on ties) and
    greedily assigned to the lighter side, group 0 on ties. Recursion
    stops once the heavier side exceeds 60% of the remaining mass; the
    final group is sampled from proportionally.
    """

    IMBALANCE_NUM = 3  # stop when 5 * heavier > 3 * total
    IMBALANCE_DEN = 5

    def __init__(self, sd: StepDist):
        self.sd = sd
        # token -> (path value, path length, leaf id)
        self.paths: dict[int, tuple[int, int, int]] = {}
        # leaf id -> (support indices ascending, cumulative weights, mass)
        self.leaves: list[tuple[np.ndarray, np.ndarray, int]] = []
        order = [int(i) for i in np.lexsort((sd.support, -sd.weights))]
        self.root = self._build(order, 0, 0)

    def _split(self, group: list[int]) -> tuple[list[int], list[int], int, int]:
        w = self.sd.weights
        sides: tuple[list[int], list[int]] = ([], [])
        masses = [0, 0]
        for idx in group:
            side = 0 if masses[0] <= masses[1] else 1
            sides[side].append(idx)
            masses[side] += int(w[idx])
        return sides[0], sides[1], masses[0], masses[1]

    def _build(self, group: list[int], path: int, depth: int):
        if len(group) > 1:
            g0, g1, m0, m1 = self._split(group)
            if self.IMBALANCE_DEN * max(m0, m1) <= self.IMBALANCE_NUM * (m0 + m1):
                left = self._build(g0, path << 1, depth + 1)
                right = self._build(g1, (path << 1) | 1, depth + 1)
                return (left, right)
        leaf_idx = np.sort(np.array(group, dtype=np.int64))
        weights = self.sd.weights[leaf_idx]
        leaf_id = len(self.leaves)
        self.leaves.append((leaf_idx, np.cumsum(weights), int(weights.sum())))
        for idx in group:
            self.paths[int(self.sd.support[idx])] = (path, depth, leaf_id)
        return leaf_id

    def walk(self, read_bit) -> tuple[int, int, int]:
        """Descend by message bits; returns (path, depth, leaf id)."""
        node = self.root
        path = 0
        depth = 0
        while isinstance(node, tuple):
            bit = read_bit()
            path = (path << 1) | bit
            node = node[bit]
            depth += 1
        return path, depth, node


class AdgCodec:
    """Message bits walk the grouping tree; the keystream samples
    inside the final group."""

    name = "adg"
    uses_key = True

    def __init__(self, mask: KeyStream, precision: int):
        self.mask = mask
        self.precision = precision
        self.embedded = 0

    def _sample_leaf(self, sd: StepDist, leaf_id: int) -> int:
        leaf_idx, leaf_cum, leaf_mass = sd.adg_tree.leaves[leaf_id]
        if leaf_idx.size == 1:
            return int(sd.support[leaf_idx[0]])
        u = self.mask.bits(self.precision)
        point = (u * leaf_mass) >> self.precision
        pos = int(np.searchsorted(leaf_cum, point, side="right"))
        return int(sd.support[leaf_idx[pos]])

    def encode_step(self, sd: StepDist, msg: MessageReader) -> StepResult:
        _, depth, leaf_id = sd.adg_tree.walk(msg.read_bit)
        token = self._sample_leaf(sd, leaf_id)
        self.embedded += depth
        return StepResult(token, depth)

    def decode_step(self, sd: StepDist, token: int) -> tuple[int, int]:
        entry = sd.adg_tree.paths.get(token)
        if entry is None:
            raise DesyncError(f"token {token} is outside the step support")
        path, depth, leaf_id = entry
        sampled = self._sample_leaf(sd, leaf_id)
        if sampled != token:
            raise DesyncError(
                f"group sampling disagrees with received token {token}"
            )
        self.embedded += depth
        return path, depth


# ---------------------------------------------------------------------------
# Streaming arithmetic codec

_AC_STATE_BITS = 64


class _AcInterval:
    """Shared [lo, hi] fixed-point interval with renormalization hooks."""

    def __init__(self):
        self.full = 1 << _AC_STATE_BITS
        self.half = self.full >> 1
        self.quarter = self.half >> 1
        self.mask_bits = self.full - 1
        self.lo = 0
        self.hi = self.mask_bits

    def update(self, sd: StepDist, sup_idx: int, on_shift, on_underflow) -> None:
        total = 1 << sd.precision
        lo_w, hi_w = sd.interval(sup_idx)
        span = self.hi - self.lo + 1
        new_lo = self.lo + lo_w * span // total
        new_hi = self.lo + hi_w * span // total - 1
        self.lo, self.hi = new_lo, new_hi
        while ((self.lo ^ self.hi) & self.half) == 0:
            on_shift()
            self.lo = (self.lo << 1) & self.mask_bits
            self.hi = ((self.hi << 1) & self.mask_bits) | 1
        while self.lo & ~self.hi & self.quarter:
            on_underflow()
            self.lo = (self.lo << 1) ^ self.half
            self.hi = ((self.hi ^ self.half) << 1) | self.half | 1


class AcEncoderCodec:
    """Message bits form a binary fraction; each step emits the token
    whose subinterval contains it. `embedded` counts bits the mirrored
    receiver has already pinned down, which is what message-completion
    logic must use (bits still inside the interval window are not yet
    recoverable)."""

    name = "ac"
    uses_key = False

    def __init__(self, msg: MessageReader, precision: int):
        self.precision = precision
        self.interval = _AcInterval()
        self._msg = msg
        self.code = msg.read(_AC_STATE_BITS)
        self.embedded = 0  # mirror of the receiver's emitted bits
        self._pending = 0
        self._last_bits = 0

    def _on_shift(self):
        self.code = ((self.code << 1) & self.interval.mask_bits) | self._msg.read_bit()
        self.embedded += 1 + self._pending
        self._last_bits += 1 + self._pending
        self._pending = 0

    def _on_underflow(self):
        half = self.interval.half
        self.code = (
            (self.code & half)
            | ((self.code << 1) & (self.interval.mask_bits >> 1))
            | self._msg.read_bit()
        )
        self._pending += 1

    def encode_step(self, sd: StepDist, msg: MessageReader) -> StepResult:
        span = self.interval.hi - self.interval.lo + 1
        total = 1 << sd.precision
        offset = self.code - self.interval.lo
        value = ((offset + 1) * total - 1) // span
        idx = sd.locate(value)
        self._last_bits = 0
        self.interval.update(sd, idx, self._on_shift, self._on_underflow)
        return StepResult(int(sd.support[idx]), self._last_bits)


class AcDecoderCodec:
    """Mirror of the encoder: replays interval updates for the received
    tokens and emits bits as they become determined."""

    name = "ac"
    uses_key = False

    def __init__(self, precision: int):
        self.precision = precision
        self.interval = _AcInterval()
        self.embedded = 0
        self._pending = 0
        self._out: list[int] = []

    def _on_shift(self):
        bit = self.interval.lo >> (_AC_STATE_BITS - 1)
        self._out.append(bit)
        self._out.extend([bit ^ 1] * self._pending)
        self.embedded += 1 + self._pending
        self._pending = 0

    def _on_underflow(self):
        self._pending += 1

    def decode_step(self, sd: StepDist, token: int) -> tuple[int, int]:
        idx = sd.support_index(token)
        self._out = []
        self.interval.update(sd, idx, self._on_shift, self._on_underflow)
        value = 0
        for bit in self._out:
            value = (value << 1) | bit
        return value, len(self._out)


CODEC_NAMES = ("ac", "meteor", "discop", "adg")


def make_encoder(name: str, *, mask: KeyStream, msg: MessageReader, precision: int):
    if name == "meteor":
        return MeteorCodec(mask, precision)
    if name == "discop":
        return DiscopCodec(mask, precision)
    if name == "adg":
        return AdgCodec(mask, precision)
    if name == "ac":
        return AcEncoderCodec(msg, precision)
    raise ValueError(f"unknown codec {name!r}")


def make_decoder(name: str, *, mask: KeyStream, precision: int):
    if name == "meteor":
        return MeteorCodec(mask, precision)
    if name == "discop":
        return DiscopCodec(mask, precision)
    if name == "adg":
        return AdgCodec(mask, precision)
    if name == "ac":
        return AcDecoderCodec(precision)
    raise ValueError(f"unknown codec {name!r}")

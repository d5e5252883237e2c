"""Integer quantization of probability distributions.

Codecs never see floats: every step distribution is converted to
integer weights summing to exactly 2^P by largest-remainder
apportionment with ascending-id tie-breaks. All comparisons below are
on exact quantities (p * 2^P is an exact float scaling; remainders of
values >= 1 are exact by Sterbenz subtraction), so the result is a pure
function of the input bits on any IEEE platform.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

MIN_PRECISION = 8
MAX_PRECISION = 32
DEFAULT_PRECISION = 20


@dataclass(frozen=True)
class QuantDist:
    """Integer-weight distribution with sum(weights) == 2**precision."""

    weights: np.ndarray
    precision: int
    support: np.ndarray = field(init=False)

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.int64)
        object.__setattr__(self, "weights", weights)
        if weights.ndim != 1 or weights.size == 0:
            raise ValueError("weights must be a non-empty 1-d array")
        if np.any(weights < 0):
            raise ValueError("weights must be nonnegative")
        if int(weights.sum()) != 1 << self.precision:
            raise ValueError(
                f"weights sum to {int(weights.sum())}, expected 2^{self.precision}"
            )
        support = np.flatnonzero(weights)
        if support.size == 0:
            raise ValueError("empty support")
        object.__setattr__(self, "support", support)

    @property
    def vocab_size(self) -> int:
        return int(self.weights.size)

    def digest(self) -> str:
        h = hashlib.blake2b(digest_size=16)
        h.update(self.precision.to_bytes(1, "big"))
        h.update(self.support.astype("<i8").tobytes())
        h.update(self.weights[self.support].astype("<i8").tobytes())
        return h.hexdigest()


def _quantize_floats(probs: np.ndarray, precision: int) -> np.ndarray:
    scale = float(1 << precision)
    x = probs * scale  # exact: scaling by a power of two
    base = np.floor(x)
    rem = x - base  # exact for x >= 1 (Sterbenz) and trivially for x < 1
    weights = base.astype(np.int64)
    deficit = (1 << precision) - int(weights.sum())
    ids = np.arange(probs.size)
    if deficit > 0:
        order = np.lexsort((ids, -rem))
        weights[order[:deficit]] += 1
    elif deficit < 0:
        # Inputs summing slightly above 1: reclaim units from the
        # smallest remainders, ties broken by descending id.
        order = np.lexsort((-ids, rem))
        take = 0
        for idx in order:
            if take == -deficit:
                break
            if weights[idx] > 0:
                weights[idx] -= 1
                take += 1
    return weights


def _quantize_fractions(probs: Sequence[Fraction], precision: int) -> np.ndarray:
    scale = 1 << precision
    weights = np.zeros(len(probs), dtype=np.int64)
    rems: list[tuple[Fraction, int]] = []
    for i, p in enumerate(probs):
        x = Fraction(p) * scale
        base = x.numerator // x.denominator
        weights[i] = base
        rems.append((x - base, i))
    deficit = scale - int(weights.sum())
    if deficit > 0:
        rems.sort(key=lambda t: (-t[0], t[1]))
        for _, i in rems[:deficit]:
            weights[i] += 1
    elif deficit < 0:
        rems.sort(key=lambda t: (t[0], -t[1]))
        take = 0
        for _, i in rems:
            if take == -deficit:
                break
            if weights[i] > 0:
                weights[i] -= 1
                take += 1
    return weights


def quantize(probs, precision: int = DEFAULT_PRECISION) -> QuantDist:
    """Quantize a probability vector to integer weights summing to 2^P.

    Accepts a float array (values in [0, 1], summing to 1 within 1e-9)
    or a sequence of exact rationals. Per-token error is bounded by
    |V| / 2^P and the argmax token always keeps weight >= 1.
    """
    # Sessions enforce the operational range [MIN_PRECISION, MAX_PRECISION];
    # smaller values remain valid here so worked examples stay checkable.
    if not 1 <= precision <= MAX_PRECISION:
        raise ValueError(f"precision must be in [1, {MAX_PRECISION}], got {precision}")
    seq = probs if not isinstance(probs, np.ndarray) else None
    if seq is not None and len(seq) > 0 and isinstance(seq[0], Fraction):
        weights = _quantize_fractions(seq, precision)
    else:
        arr = np.asarray(probs, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("probability vector must be non-empty and 1-d")
        if np.any(arr < -1e-9) or abs(float(arr.sum()) - 1.0) > 1e-6:
            raise ValueError("input is not a probability distribution")
        weights = _quantize_floats(np.maximum(arr, 0.0), precision)
    return QuantDist(weights=weights, precision=precision)


def cumulative(q: QuantDist) -> np.ndarray:
    """Prefix sums of support weights in ascending id order; ends at 2^P."""
    return np.cumsum(q.weights[q.support], dtype=np.int64)


def redistribute(q: QuantDist, banned: Sequence[int]) -> QuantDist:
    """Zero out banned tokens, reassigning their mass proportionally.

    Exact integer largest-remainder on the surviving weights, so both
    ends derive the identical distribution. If banning would empty the
    support, the distribution is returned unchanged.
    """
    banned_set = [b for b in banned if 0 <= b < q.vocab_size and q.weights[b] > 0]
    if not banned_set:
        return q
    removed = int(q.weights[list(banned_set)].sum())
    scale = 1 << q.precision
    keep_total = scale - removed
    if keep_total == 0:
        return q
    weights = q.weights.copy()
    weights[list(banned_set)] = 0
    new_weights = np.zeros_like(weights)
    rems: list[tuple[Fraction, int]] = []
    for idx in np.flatnonzero(weights):
        share = Fraction(int(weights[idx]) * scale, keep_total)
        base = share.numerator // share.denominator
        new_weights[idx] = base
        rems.append((share - base, int(idx)))
    deficit = scale - int(new_weights.sum())
    rems.sort(key=lambda t: (-t[0], t[1]))
    for _, idx in rems[:deficit]:
        new_weights[idx] += 1
    return QuantDist(weights=new_weights, precision=q.precision)

"""Per-step reshaping of next-token distributions.

Two adjustments compose at every generation step. The sequential
adjustment divides logits by a temperature that grows logarithmically
with the instantaneous entropy of the step distribution, flattening
over-confident predictions. The spatial adjustment multiplies each
token's logit by a factor derived from the ratio of its frequency in a
target corpus to its frequency in model-generated text, pulling the
distribution toward the target domain.

Conventions both ends must share (decoding breaks otherwise):
  * entropy is measured in bits;
  * the spatial factor uses the natural log and is divided by ln 3 so a
    frequency ratio of 1 is exactly neutral and alpha = 0 disables the
    stage outright;
  * before the multiplication, logits are shifted so the support
    minimum sits at zero. Factors then scale nonnegative scores, which
    keeps the boost direction right for tokens the target favors
    (multiplying raw negative logits would invert it).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .corpus import FreqTable
from .lm import entropy_bits, softmax, truncate
from .numerics import det_log, det_log2, det_pow

_LN3 = det_log(3.0)

STAGE_ORDERS = ("ta-sa", "sa-ta")


@dataclass(frozen=True)
class ReformConfig:
    """Hyperparameters for both adjustment dimensions."""

    theta: float = 0.01
    c: float = 0.1
    alpha: float = 0.1
    base_temp: float = 1.0
    ngram_order: int = 1
    epsilon_freq: Fraction | None = None
    stage_order: str = "ta-sa"
    top_k: int | None = None
    top_p: float = 1.0

    def __post_init__(self):
        if self.theta <= 0:
            raise ValueError("theta must be > 0")
        if self.c < 0 or self.alpha < 0:
            raise ValueError("c and alpha must be >= 0")
        if self.base_temp <= 0:
            raise ValueError("base_temp must be > 0")
        if self.ngram_order < 1:
            raise ValueError("ngram_order must be >= 1")
        if self.stage_order not in STAGE_ORDERS:
            raise ValueError(f"stage_order must be one of {STAGE_ORDERS}")
        if self.epsilon_freq is not None and self.epsilon_freq <= 0:
            raise ValueError("epsilon_freq must be > 0")


@dataclass
class ReformContext:
    """Frequency guidance tables plus config; immutable after build."""

    target_freq: FreqTable
    model_freq: FreqTable
    config: ReformConfig
    vocab_size: int
    _eps: Fraction = field(init=False)
    _unigram_factors: np.ndarray | None = field(init=False, default=None)
    _factor_cache: dict = field(init=False, default_factory=dict)

    def __post_init__(self):
        n = self.config.ngram_order
        if self.target_freq.order != n or self.model_freq.order != n:
            raise ValueError(
                "frequency tables must match the configured ngram order"
            )
        if (
            self.target_freq.vocab_hash
            and self.model_freq.vocab_hash
            and self.target_freq.vocab_hash != self.model_freq.vocab_hash
        ):
            raise ValueError("frequency tables built over different vocabularies")
        eps = self.config.epsilon_freq
        if eps is None:
            eps = Fraction(1, self.model_freq.total + self.vocab_size)
        object.__setattr__(self, "_eps", eps)
        if n == 1:
            keys = np.arange(self.vocab_size)
            factors = np.array(
                [spatial_factor(int(k), self) for k in keys], dtype=np.float64
            )
            object.__setattr__(self, "_unigram_factors", factors)

    def factors(self, history: Sequence[int]) -> np.ndarray:
        """Raw spatial factors for every candidate token after history."""
        n = self.config.ngram_order
        if n == 1:
            assert self._unigram_factors is not None
            return self._unigram_factors
        ctx = tuple(history[-(n - 1):]) if len(history) >= n - 1 else tuple(history)
        cached = self._factor_cache.get(ctx)
        if cached is None:
            cached = np.array(
                [spatial_factor(ctx + (tok,), self) for tok in range(self.vocab_size)],
                dtype=np.float64,
            )
            self._factor_cache[ctx] = cached
        return cached


def instantaneous_entropy(probs: np.ndarray) -> float:
    """Entropy of the step distribution in bits; the capacity ceiling."""
    return entropy_bits(probs)


def temperature(entropy: float, config: ReformConfig) -> float:
    """base_temp + theta * log2(1 + c * E); increasing and concave in E."""
    if entropy < 0:
        raise ValueError("entropy must be >= 0")
    return config.base_temp + config.theta * det_log2(1.0 + config.c * entropy)


def sequential_reform(logits: np.ndarray, temp: float) -> np.ndarray:
    """Divide every score by the step temperature."""
    if temp <= 0:
        raise ValueError("temperature must be > 0")
    return np.asarray(logits, dtype=np.float64) / temp


def spatial_factor(gram, context: ReformContext) -> float:
    """ln(2 + (f_target / f_model) ** alpha) with floored frequencies.

    Always above ln 2; the floor keeps the ratio finite for n-grams
    absent from either table. Keys are a bare id at order 1 and an id
    tuple (trailing context + candidate) at higher orders.
    """
    eps = context._eps
    f_target = max(context.target_freq.frequency(gram), eps)
    f_model = max(context.model_freq.frequency(gram), eps)
    ratio = f_target / f_model
    alpha = context.config.alpha
    if alpha == 0.0 or ratio == 1:
        powered = 1.0
    else:
        powered = det_pow(float(ratio), alpha)
    return det_log(2.0 + powered)


def spatial_reform(logits: np.ndarray, factors: np.ndarray) -> np.ndarray:
    """Multiply each score by its raw spatial factor."""
    return np.asarray(logits, dtype=np.float64) * np.asarray(factors, dtype=np.float64)


@dataclass(frozen=True)
class StepReform:
    """One reformed step: output distribution plus logged diagnostics."""

    probs: np.ndarray
    entropy: float
    temp: float


def reform_step_full(
    logits: np.ndarray,
    context: ReformContext,
    history: Sequence[int] = (),
    support: np.ndarray | None = None,
) -> StepReform:
    """Full per-step composition; returns diagnostics for the record.

    Order (default): softmax -> entropy -> temperature division ->
    normalized spatial multiplication on min-shifted scores -> softmax
    -> optional truncation. `support` masks tokens with zero model
    weight (external providers); masked tokens stay excluded.
    """
    cfg = context.config
    arr = np.asarray(logits, dtype=np.float64)
    if support is None:
        support = np.ones(arr.size, dtype=bool)
    sup_idx = np.flatnonzero(support)
    if sup_idx.size == 0:
        raise ValueError("empty support")

    def freq_stage(scores: np.ndarray) -> np.ndarray:
        factors = context.factors(history) / _LN3
        out = scores.copy()
        sup = scores[sup_idx]
        out[sup_idx] = (sup - sup.min()) * factors[sup_idx]
        return out

    # The temperature always responds to the entropy of the distribution
    # it is applied to; with the reversed stage order that is the
    # frequency-adjusted one, which is what makes the orders differ.
    if cfg.stage_order == "ta-sa":
        ent = instantaneous_entropy(_masked_softmax(arr, sup_idx))
        temp = temperature(ent, cfg)
        work = freq_stage(sequential_reform(arr, temp))
    else:
        work = freq_stage(arr)
        ent = instantaneous_entropy(_masked_softmax(work, sup_idx))
        temp = temperature(ent, cfg)
        work = sequential_reform(work, temp)
    probs = _masked_softmax(work, sup_idx)
    if cfg.top_k is not None or cfg.top_p < 1.0:
        probs = truncate(probs, cfg.top_k, cfg.top_p)
    return StepReform(probs=probs, entropy=ent, temp=temp)


def reform_step(
    logits: np.ndarray,
    context: ReformContext,
    history: Sequence[int] = (),
    support: np.ndarray | None = None,
) -> np.ndarray:
    """Reformed step distribution (see reform_step_full)."""
    return reform_step_full(logits, context, history, support).probs


def _masked_softmax(scores: np.ndarray, sup_idx: np.ndarray) -> np.ndarray:
    out = np.zeros(scores.size, dtype=np.float64)
    out[sup_idx] = softmax(scores[sup_idx])
    return out

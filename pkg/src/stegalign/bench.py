"""Synthetic benchmark setups for capacity and alignment experiments.

The standard scenario mirrors the practical failure mode of modern text
channels: the model's unigram distribution is a sharpened version of
the target corpus distribution (over-confident on common tokens, close
to silent on rare ones). Frequency alignment should both recover target
statistics and raise entropy, so these setups make capacity and
alignment effects measurable at desk scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import FreqTable, NGramModel, count_frequencies, train_ngram
from .lm import NGramProvider
from .pipeline import StegoSession
from .reformer import ReformConfig, ReformContext


@dataclass
class Benchmark:
    vocab_size: int
    model: NGramModel
    provider: NGramProvider
    target_freq: FreqTable
    model_freq: FreqTable

    def session(
        self,
        codec: str,
        key: bytes,
        nonce: bytes,
        *,
        c: float = 0.1,
        alpha: float = 0.1,
        cache: dict | None = None,
        **kwargs,
    ) -> StegoSession:
        reform = ReformContext(
            target_freq=self.target_freq,
            model_freq=self.model_freq,
            config=ReformConfig(c=c, alpha=alpha),
            vocab_size=self.vocab_size,
        )
        return StegoSession(
            self.provider, reform, codec, key, nonce, dist_cache=cache, **kwargs
        )


def zipf_probs(vocab_size: int, sharpness: float) -> np.ndarray:
    """Zipf-shaped distribution; larger sharpness concentrates mass."""
    raw = 1.0 / np.arange(1, vocab_size + 1) ** sharpness
    return raw / raw.sum()


def skewed_benchmark(
    seed: int,
    vocab_size: int = 24,
    model_sharpness: float = 2.0,
    target_sharpness: float = 0.7,
    corpus_tokens: int = 30_000,
) -> Benchmark:
    """Order-1 channel whose model is sharpened relative to the target.

    The model is trained on text drawn from a sharpened Zipf
    distribution while the target corpus is flatter, so target-favored
    tokens are exactly the ones the model under-weights. The model
    frequency table is taken from the model's own training corpus; at
    order 1 that matches the statistics of its random samples.
    """
    rng = np.random.default_rng(seed)
    model_corpus = [
        rng.choice(vocab_size, size=corpus_tokens,
                   p=zipf_probs(vocab_size, model_sharpness)).tolist()
    ]
    target_corpus = [
        rng.choice(vocab_size, size=corpus_tokens,
                   p=zipf_probs(vocab_size, target_sharpness)).tolist()
    ]
    model = train_ngram(model_corpus, order=1, kappa=1, vocab_size=vocab_size)
    return Benchmark(
        vocab_size=vocab_size,
        model=model,
        provider=NGramProvider(model),
        target_freq=count_frequencies(target_corpus, 1),
        model_freq=count_frequencies(model_corpus, 1),
    )


def roundtrip_benchmark(order: int, vocab_size: int = 32, seed: int = 1234) -> Benchmark:
    """High-entropy n-gram channel for correctness matrices."""
    rng = np.random.default_rng(seed + order)
    streams = [
        rng.integers(0, vocab_size, size=4_000).tolist() for _ in range(4)
    ]
    model = train_ngram(streams, order=order, kappa=1, vocab_size=vocab_size)
    table = count_frequencies(streams, 1)
    return Benchmark(
        vocab_size=vocab_size,
        model=model,
        provider=NGramProvider(model),
        target_freq=table,
        model_freq=table,
    )

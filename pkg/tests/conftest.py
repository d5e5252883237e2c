import numpy as np
import pytest

from stegalign.corpus import FreqTable, count_frequencies, train_ngram
from stegalign.lm import NGramProvider
from stegalign.reformer import ReformConfig, ReformContext


@pytest.fixture(scope="session")
def toy_setup():
    """Small trained model plus frequency tables, shared across tests."""
    rng = np.random.default_rng(42)
    vocab_size = 12
    streams = [list(map(int, rng.integers(0, vocab_size, size=300))) for _ in range(6)]
    model = train_ngram(streams, order=2, kappa=1, vocab_size=vocab_size)
    target_stream = [int(t) for t in rng.integers(0, vocab_size, size=800)]
    target = count_frequencies([target_stream], 1)
    model_freq = count_frequencies(streams, 1)
    return {
        "vocab_size": vocab_size,
        "model": model,
        "provider": NGramProvider(model),
        "target": target,
        "model_freq": model_freq,
    }


def make_reform(setup, **overrides) -> ReformContext:
    cfg = ReformConfig(**overrides)
    return ReformContext(
        target_freq=setup["target"],
        model_freq=setup["model_freq"],
        config=cfg,
        vocab_size=setup["vocab_size"],
    )


def neutral_tables(vocab_size: int) -> tuple[FreqTable, FreqTable]:
    """Identical uniform tables: the frequency stage becomes a no-op."""
    counts = {t: 1 for t in range(vocab_size)}
    return (
        FreqTable(counts=dict(counts), order=1),
        FreqTable(counts=dict(counts), order=1),
    )

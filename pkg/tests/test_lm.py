import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stegalign.corpus import train_ngram
from stegalign.lm import NGramProvider, entropy_bits, softmax, truncate


class TestNGramProvider:
    def test_unseen_context_gives_uniform_logits(self):
        model = train_ngram([[1, 1, 2]], order=2, kappa=1, vocab_size=3)
        provider = NGramProvider(model)
        logits = provider.log_probs((2,))
        assert np.all(logits == logits[0])

    def test_trained_context_matches_smoothing_formula(self):
        model = train_ngram([[1, 1, 2]], order=2, kappa=1, vocab_size=3)
        provider = NGramProvider(model)
        probs = softmax(provider.log_probs((0, 1)))
        np.testing.assert_allclose(probs, [1 / 5, 2 / 5, 2 / 5], atol=1e-12)

    def test_repeat_queries_bit_identical(self):
        model = train_ngram([[1, 2, 3, 1, 2]], order=2, kappa=1, vocab_size=4)
        provider = NGramProvider(model)
        a = provider.log_probs((1,))
        b = provider.log_probs((1,))
        assert a.tobytes() == b.tobytes()


class TestSoftmax:
    def test_symmetric_two(self):
        np.testing.assert_allclose(softmax(np.array([0.0, 0.0])), [0.5, 0.5])

    def test_ln2_closed_form(self):
        probs = softmax(np.array([math.log(2), 0.0]))
        np.testing.assert_allclose(probs, [2 / 3, 1 / 3], atol=1e-12)

    def test_constant_vector_uniform(self):
        np.testing.assert_allclose(softmax(np.array([5.0] * 4)), [0.25] * 4)

    @settings(max_examples=100)
    @given(
        st.lists(st.floats(-30, 30), min_size=2, max_size=20),
        st.floats(-50, 50),
    )
    def test_shift_invariance(self, logits, shift):
        a = softmax(np.array(logits))
        b = softmax(np.array(logits) + shift)
        assert np.abs(a - b).max() < 1e-12

    @settings(max_examples=100)
    @given(st.lists(st.floats(-30, 30), min_size=1, max_size=50))
    def test_sums_to_one(self, logits):
        assert abs(softmax(np.array(logits)).sum() - 1.0) < 1e-9


class TestTruncate:
    def test_top_k_renormalizes(self):
        out = truncate(np.array([0.5, 0.3, 0.2]), top_k=2)
        np.testing.assert_allclose(out, [0.625, 0.375, 0.0])

    def test_identity_parameters_are_noop(self):
        p = np.array([0.4, 0.35, 0.25])
        out = truncate(p, top_k=3, top_p=1.0)
        assert np.array_equal(out, p)

    def test_top_p_smallest_prefix(self):
        out = truncate(np.array([0.5, 0.3, 0.2]), top_k=3, top_p=0.5)
        np.testing.assert_allclose(out, [1.0, 0.0, 0.0])

    def test_tie_break_by_ascending_id(self):
        out = truncate(np.array([0.25, 0.25, 0.25, 0.25]), top_k=2)
        np.testing.assert_allclose(out, [0.5, 0.5, 0.0, 0.0])

    def test_invalid_parameters_rejected(self):
        with pytest.raises(ValueError):
            truncate(np.array([1.0]), top_k=0)
        with pytest.raises(ValueError):
            truncate(np.array([1.0]), top_p=0.0)

    @settings(max_examples=100)
    @given(
        st.lists(st.floats(0.01, 1.0), min_size=2, max_size=15),
        st.integers(1, 15),
        st.floats(0.2, 1.0),
    )
    def test_never_increases_entropy(self, raw, k, p):
        probs = np.array(raw) / sum(raw)
        k = min(k, probs.size)
        out = truncate(probs, top_k=k, top_p=p)
        assert entropy_bits(out) <= entropy_bits(probs) + 1e-9

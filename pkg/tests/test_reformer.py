import math
from fractions import Fraction

import numpy as np
import pytest

from stegalign.corpus import FreqTable
from stegalign.lm import softmax
from stegalign.numerics import det_log
from stegalign.quantize import quantize
from stegalign.reformer import (
    ReformConfig,
    ReformContext,
    instantaneous_entropy,
    reform_step,
    reform_step_full,
    sequential_reform,
    spatial_factor,
    spatial_reform,
    temperature,
)

from conftest import make_reform, neutral_tables


def _context(target_counts, model_counts, vocab_size, **cfg):
    return ReformContext(
        target_freq=FreqTable(counts=target_counts, order=1),
        model_freq=FreqTable(counts=model_counts, order=1),
        config=ReformConfig(**cfg),
        vocab_size=vocab_size,
    )


class TestEntropy:
    def test_uniform_four(self):
        assert instantaneous_entropy(np.full(4, 0.25)) == pytest.approx(2.0)

    def test_degenerate(self):
        assert instantaneous_entropy(np.array([1.0, 0.0, 0.0])) == 0.0

    def test_hand_evaluated(self):
        assert instantaneous_entropy(np.array([0.5, 0.25, 0.25])) == pytest.approx(1.5)


class TestTemperature:
    def test_zero_entropy_gives_base_exactly(self):
        assert temperature(0.0, ReformConfig()) == 1.0
        assert temperature(0.0, ReformConfig(base_temp=0.9)) == 0.9

    def test_forced_log_values(self):
        cfg = ReformConfig(theta=0.01, c=0.1)
        assert temperature(10.0, cfg) == pytest.approx(1.01, abs=1e-12)
        assert temperature(30.0, cfg) == pytest.approx(1.02, abs=1e-12)

    def test_monotone_and_concave_on_grid(self):
        cfg = ReformConfig()
        grid = np.linspace(0.0, 30.0, 301)
        values = np.array([temperature(float(e), cfg) for e in grid])
        first = np.diff(values)
        assert np.all(first > 0)
        assert np.all(np.diff(first) < 1e-9)

    def test_bound_at_vocab_entropy_cap(self):
        cfg = ReformConfig()
        vocab_size = 2**30
        cap = cfg.base_temp + cfg.theta * math.log2(1 + cfg.c * math.log2(vocab_size))
        for e in np.linspace(0, math.log2(vocab_size), 50):
            tp = temperature(float(e), cfg)
            assert 1.0 <= tp <= cap + 1e-12


class TestSequentialReform:
    def test_scalar_division(self):
        out = sequential_reform(np.array([2.0, 4.0]), 2.0)
        assert out.tolist() == [1.0, 2.0]

    def test_identity_at_unit_temperature(self):
        logits = np.array([0.3, -1.2, 5.0])
        assert np.array_equal(sequential_reform(logits, 1.0), logits)

    def test_infinite_temperature_limit_is_uniform(self):
        logits = np.array([3.0, 1.0, -2.0, 0.5])
        probs = softmax(sequential_reform(logits, 1e6))
        assert np.abs(probs - 0.25).max() < 1e-5


class TestSpatialFactor:
    def test_equal_frequencies_give_ln3(self):
        rc = _context({0: 5, 1: 5}, {0: 5, 1: 5}, 2)
        assert spatial_factor(0, rc) == pytest.approx(math.log(3), abs=1e-12)

    def test_alpha_zero_gives_ln3_everywhere(self):
        rc = _context({0: 9, 1: 1}, {0: 1, 1: 9}, 2, alpha=0.0)
        for tok in (0, 1):
            assert spatial_factor(tok, rc) == pytest.approx(math.log(3), abs=1e-15)

    def test_ratio_four_hand_value(self):
        # f_target = 4 * f_model, alpha 0.1 -> ln(2 + 4^0.1)
        rc = _context({0: 4, 1: 6}, {0: 1, 1: 9}, 2, alpha=0.1)
        assert spatial_factor(0, rc) == pytest.approx(math.log(2 + 4**0.1), abs=1e-9)
        assert spatial_factor(0, rc) == pytest.approx(1.1469, abs=2e-4)

    def test_always_above_ln2(self):
        rc = _context({0: 1, 1: 9999}, {0: 9999, 1: 1}, 2, alpha=0.5)
        assert spatial_factor(0, rc) > math.log(2)

    def test_floor_handles_missing_grams(self):
        rc = _context({0: 10}, {0: 10}, 3)
        # token 2 absent from both tables: floored ratio is 1 -> ln3
        assert spatial_factor(2, rc) == pytest.approx(math.log(3), abs=1e-12)


class TestSpatialReform:
    def test_equal_factors_on_equal_logits(self):
        out = softmax(spatial_reform(np.array([1.0, 1.0]), np.array([math.log(3)] * 2)))
        np.testing.assert_allclose(out, [0.5, 0.5])

    def test_hand_evaluated_multiplication(self):
        reformed = spatial_reform(np.array([2.0, 1.0]), np.array([1.0, 1.2]))
        probs = softmax(reformed)
        np.testing.assert_allclose(probs, [0.690, 0.310], atol=5e-4)

    def test_constant_factor_preserves_argmax(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            logits = rng.normal(size=8)
            out = softmax(spatial_reform(logits, np.full(8, 1.3)))
            assert np.argmax(out) == np.argmax(softmax(logits))


class TestReformStep:
    def test_disabled_dimensions_match_plain_softmax(self):
        rng = np.random.default_rng(11)
        rc = _context({0: 3, 1: 2, 2: 5}, {0: 5, 1: 3, 2: 2}, 3, c=0.0, alpha=0.0)
        for _ in range(50):
            logits = rng.normal(size=3)
            logits -= logits.mean()
            out = reform_step(logits, rc)
            ref = softmax(logits / rc.config.base_temp)
            assert np.abs(out - ref).max() < 1e-6
            assert np.argmax(out) == np.argmax(ref)

    def test_uniform_logits_stay_uniform(self):
        rc = _context({0: 9, 1: 1, 2: 5}, {0: 1, 1: 9, 2: 5}, 3)
        out = reform_step(np.zeros(3), rc)
        np.testing.assert_allclose(out, [1 / 3] * 3, atol=1e-12)

    def test_output_is_valid_distribution(self, toy_setup):
        rc = make_reform(toy_setup)
        provider = toy_setup["provider"]
        rng = np.random.default_rng(5)
        for _ in range(25):
            hist = tuple(rng.integers(0, toy_setup["vocab_size"], size=3))
            probs = reform_step(provider.log_probs(hist), rc, hist)
            assert probs.min() >= 0.0
            assert abs(probs.sum() - 1.0) < 1e-9

    def test_favored_token_gains_mass_brute_force(self):
        # one target-favored token against two model-favored ones, over a
        # grid of logit triples: the favored token with a positive shifted
        # score never loses probability mass
        grid = np.linspace(-2.0, 2.0, 5)
        rc = _context({0: 6, 1: 2, 2: 2}, {0: 2, 1: 4, 2: 4}, 3, c=0.0, alpha=0.2)
        baseline_cfg = _context({0: 6, 1: 2, 2: 2}, {0: 2, 1: 4, 2: 4}, 3, c=0.0, alpha=0.0)
        for a in grid:
            for b in grid:
                for c in grid:
                    logits = np.array([a, b, c])
                    if a <= min(b, c):  # favored token must carry positive shifted score
                        continue
                    with_spatial = reform_step(logits, rc)
                    plain = reform_step(logits, baseline_cfg)
                    assert with_spatial[0] >= plain[0] - 1e-12

    def test_sequential_only_never_lowers_entropy(self):
        rng = np.random.default_rng(17)
        rc = _context({0: 1, 1: 1, 2: 1, 3: 1}, {0: 1, 1: 1, 2: 1, 3: 1}, 4,
                      c=0.5, alpha=0.0)
        base_entropies = []
        reformed_entropies = []
        for _ in range(100):
            logits = rng.normal(scale=2.0, size=4)
            base_entropies.append(instantaneous_entropy(softmax(logits)))
            reformed_entropies.append(
                instantaneous_entropy(reform_step(logits, rc))
            )
        assert np.mean(reformed_entropies) >= np.mean(base_entropies) - 1e-12

    def test_stage_order_flag_changes_composition(self):
        rc_tasa = _context({0: 9, 1: 1}, {0: 1, 1: 9}, 2, alpha=0.4, c=0.3)
        rc_sata = _context({0: 9, 1: 1}, {0: 1, 1: 9}, 2, alpha=0.4, c=0.3,
                           stage_order="sa-ta")
        logits = np.array([1.0, 2.0])
        a = reform_step(logits, rc_tasa)
        b = reform_step(logits, rc_sata)
        assert not np.allclose(a, b)

    def test_truncation_applied_last(self):
        rc = _context({0: 1, 1: 1, 2: 1}, {0: 1, 1: 1, 2: 1}, 3, top_k=1)
        out = reform_step(np.array([0.0, 1.0, 0.5]), rc)
        assert out.tolist() == [0.0, 1.0, 0.0]

    def test_monte_carlo_alignment_direction(self, toy_setup):
        # a token the model under-weights relative to the target corpus must
        # appear at least as often under the reshaped distribution
        rng = np.random.default_rng(23)
        model_probs = np.array([0.2, 0.5, 0.3])
        target_counts = {0: 40, 1: 35, 2: 25}
        model_counts = {0: 20, 1: 50, 2: 30}
        rc = _context(target_counts, model_counts, 3, alpha=0.1, c=0.0)
        baseline = _context(target_counts, model_counts, 3, alpha=0.0, c=0.0)
        logits = det_log(model_probs)
        p_reform = reform_step(logits, rc)
        p_plain = reform_step(logits, baseline)
        draws = 100_000
        hits_reform = int((rng.random(draws) < p_reform[0]).sum())
        hits_plain = int((rng.random(draws) < p_plain[0]).sum())
        assert p_reform[0] > p_plain[0]
        assert hits_reform >= hits_plain - 300  # one-sided with MC slack

    def test_quantized_pipeline_is_deterministic(self, toy_setup):
        rc = make_reform(toy_setup)
        provider = toy_setup["provider"]
        hist = (1, 2, 3)
        first = quantize(reform_step(provider.log_probs(hist), rc, hist), 20)
        second = quantize(reform_step(provider.log_probs(hist), rc, hist), 20)
        assert np.array_equal(first.weights, second.weights)


class TestConfigValidation:
    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            ReformConfig(theta=0.0)
        with pytest.raises(ValueError):
            ReformConfig(c=-1.0)
        with pytest.raises(ValueError):
            ReformConfig(base_temp=0.0)
        with pytest.raises(ValueError):
            ReformConfig(stage_order="backwards")

    def test_table_order_must_match_config(self):
        t, m = neutral_tables(4)
        with pytest.raises(ValueError):
            ReformContext(target_freq=t, model_freq=m,
                          config=ReformConfig(ngram_order=2), vocab_size=4)

    def test_default_floor_uses_model_total(self):
        t, m = neutral_tables(4)
        rc = ReformContext(target_freq=t, model_freq=m, config=ReformConfig(),
                           vocab_size=4)
        assert rc._eps == Fraction(1, m.total + 4)

    def test_diagnostics_returned(self):
        t, m = neutral_tables(3)
        rc = ReformContext(target_freq=t, model_freq=m, config=ReformConfig(),
                           vocab_size=3)
        res = reform_step_full(np.array([0.0, 1.0, -1.0]), rc)
        assert res.temp >= 1.0
        assert 0.0 <= res.entropy <= math.log2(3)

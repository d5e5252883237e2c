import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from stegalign.numerics import det_exp, det_log, det_log2, det_pow, exact_sum


def test_exact_values():
    assert det_exp(0.0) == 1.0
    assert det_log(1.0) == 0.0
    assert det_exp(-1e9) == 0.0  # sentinel logits must underflow cleanly


@given(st.floats(min_value=-700, max_value=700))
def test_exp_matches_libm(x):
    assert math.isclose(det_exp(x), math.exp(x), rel_tol=5e-15)


@given(st.floats(min_value=1e-300, max_value=1e300))
def test_log_matches_libm(x):
    ref = math.log(x)
    if ref == 0.0:
        assert abs(det_log(x)) < 1e-15
    else:
        assert math.isclose(det_log(x), ref, rel_tol=5e-15)


@given(st.floats(min_value=1e-12, max_value=1e6))
def test_exp_log_inverse(x):
    assert math.isclose(det_exp(det_log(x)), x, rel_tol=1e-13)


@settings(max_examples=200)
@given(
    st.floats(min_value=1e-6, max_value=1e6),
    st.floats(min_value=-3, max_value=3),
)
def test_pow_matches_libm(base, exponent):
    assert math.isclose(det_pow(base, exponent), base**exponent, rel_tol=1e-12)


def test_pow_zero_exponent_is_exactly_one():
    assert det_pow(123.456, 0.0) == 1.0


def test_vectorised_agrees_with_scalar():
    xs = np.linspace(-20, 20, 101)
    vec = det_exp(xs)
    assert all(vec[i] == det_exp(float(x)) for i, x in enumerate(xs))
    ys = np.linspace(0.001, 50, 101)
    vec = det_log(ys)
    assert all(vec[i] == det_log(float(y)) for i, y in enumerate(ys))


def test_log2_of_powers_of_two():
    for k in range(-10, 11):
        assert math.isclose(det_log2(2.0**k), k, abs_tol=1e-12)


def test_exact_sum_is_order_independent():
    values = [1e16, 1.0, -1e16, 1.0]
    assert exact_sum(values) == 2.0


def test_log_rejects_nonpositive():
    import pytest

    with pytest.raises(ValueError):
        det_log(0.0)
    with pytest.raises(ValueError):
        det_log(np.array([1.0, -2.0]))

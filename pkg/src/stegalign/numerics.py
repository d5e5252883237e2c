"""Deterministic floating-point transcendentals.

Both ends of a covert channel must derive bit-identical integer
distributions from the same inputs. libm's exp/log may differ across
platforms in the last ulp, which is enough to flip a largest-remainder
tie during quantization and desynchronise sender and receiver. The
replacements here use only operations IEEE 754 requires to be correctly
rounded (+, -, *, /, and exact scaling by powers of two) in a fixed
evaluation order, so identical inputs give identical outputs on every
conforming platform. Accuracy is a few ulp, far inside every tolerance
used by the pipeline.
"""

from __future__ import annotations

import math

import numpy as np

# Cody-Waite split of ln 2: LN2_HI carries enough trailing zero bits
# that k * LN2_HI is exact for every |k| that exp() can see.
_LN2_HI = 6.93147180369123816490e-01
_LN2_LO = 1.90821492927058770002e-10
_INV_LN2 = 1.4426950408889634074
_SQRT_HALF = 0.7071067811865476

# exp(r) Taylor coefficients 1/k!, k = 0..13; |r| <= ln2/2 keeps the
# truncation error below 1e-17 relative.
_EXP_COEFFS = tuple(1.0 / math.factorial(k) for k in range(13, -1, -1))

# atanh series for log: ln m = 2s * (1 + z/3 + z^2/5 + ...), z = s^2.
_LOG_DENOMS = tuple(float(d) for d in range(19, 2, -2))


def det_exp(x):
    """exp(x) from arithmetic ops only; deterministic across platforms.

    Accepts a float or an ndarray; values outside the double range
    saturate to 0.0 / inf like the libm function.
    """
    arr = np.asarray(x, dtype=np.float64)
    scalar = arr.ndim == 0
    a = np.clip(arr, -750.0, 710.0)
    k = np.rint(a * _INV_LN2)
    r = (a - k * _LN2_HI) - k * _LN2_LO
    p = np.full_like(r, _EXP_COEFFS[0])
    for c in _EXP_COEFFS[1:]:
        p = p * r + c
    out = np.ldexp(p, k.astype(np.int64))
    return float(out) if scalar else out


def det_log(x):
    """Natural log from arithmetic ops only; requires x > 0."""
    arr = np.asarray(x, dtype=np.float64)
    scalar = arr.ndim == 0
    if np.any(arr <= 0.0) or not np.all(np.isfinite(arr)):
        raise ValueError("det_log requires finite positive input")
    m, e = np.frexp(arr)
    small = m < _SQRT_HALF
    m = np.where(small, m * 2.0, m)
    e = (e - small).astype(np.float64)
    s = (m - 1.0) / (m + 1.0)
    z = s * s
    t = np.full_like(z, 1.0 / _LOG_DENOMS[0])
    for d in _LOG_DENOMS[1:]:
        t = t * z + 1.0 / d
    ln_m = 2.0 * s * (1.0 + z * t)
    out = e * _LN2_HI + (ln_m + e * _LN2_LO)
    return float(out) if scalar else out


def det_log2(x):
    """Base-2 log built on det_log."""
    out = det_log(x) * _INV_LN2
    return out


def det_pow(base, exponent: float):
    """base ** exponent for base > 0, deterministic."""
    if exponent == 0.0:
        arr = np.asarray(base, dtype=np.float64)
        return 1.0 if arr.ndim == 0 else np.ones_like(arr)
    return det_exp(det_log(base) * exponent)


def exact_sum(values) -> float:
    """Correctly rounded float sum (order-independent)."""
    return math.fsum(values)

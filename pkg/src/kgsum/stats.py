"""Student's paired t-test.

The two-sided p-value comes from the regularized incomplete beta
function ``I_x(a, b)`` evaluated with the standard continued-fraction
expansion: for a t statistic with ``v`` degrees of freedom,
``p = I_{v/(v+t^2)}(v/2, 1/2)``.  Degenerate inputs follow the usual
conventions: identical samples give p = 1; zero-variance, nonzero-mean
differences give p = 0.
"""

from __future__ import annotations

from math import exp, lgamma, log, log1p, sqrt

import numpy as np

from kgsum.errors import ContractError

__all__ = ["reg_inc_beta", "t_two_sided_p", "paired_t_test"]

_MAX_ITER = 300
_EPS = 3.0e-16
_FPMIN = 1.0e-300


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ContractError("incomplete beta continued fraction did not converge")


def reg_inc_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b) for a, b > 0."""
    if a <= 0.0 or b <= 0.0:
        raise ContractError("incomplete beta requires positive parameters")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = lgamma(a + b) - lgamma(a) - lgamma(b) + a * log(x) + b * log1p(-x)
    front = exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, dof: int) -> float:
    """Two-sided tail probability of Student's t distribution.

    Branches on ``t^2 < dof`` so the incomplete-beta argument is computed
    on the side that avoids cancellation near 0 and 1.
    """
    if dof < 1:
        raise ContractError("degrees of freedom must be >= 1")
    tt = t * t
    if tt < dof:
        return 1.0 - reg_inc_beta(0.5, dof / 2.0, tt / (dof + tt))
    return reg_inc_beta(dof / 2.0, 0.5, dof / (dof + tt))


def paired_t_test(scores_x, scores_y) -> float:
    """Two-sided p-value of the paired t-test between two score vectors.

    The vectors must be paired (same entities, same order) with at least
    two pairs.
    """
    x = np.asarray(scores_x, dtype=np.float64)
    y = np.asarray(scores_y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ContractError(f"paired samples must be equal-length vectors, got {x.shape} and {y.shape}")
    n = x.shape[0]
    if n < 2:
        raise ContractError("paired t-test needs at least two pairs")
    d = x - y
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        return 1.0 if mean == 0.0 else 0.0
    t = mean / (sd / sqrt(n))
    return t_two_sided_p(t, n - 1)

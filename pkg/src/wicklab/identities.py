"""Residuals of the Hermite identities on a grid of ``(x, C)`` values.

Errors are relative to the magnitude of the sum of absolute monomial terms,
``sum_l |c_l| |x|^{k-2l}``, which stays meaningful near the polynomial's zeros.
"""
from __future__ import annotations

from math import comb, factorial

import numpy as np

from .hermite import (
    complex_hermite_eval,
    hermite_eval,
    hermite_explicit,
    hermite_inverse_coeffs,
    hermite_monomial_coeffs,
    hermite_table,
)


def hermite_scale(k: int, x, C: float) -> np.ndarray:
    """``sum_l |coef_l| |x|^{k-2l}`` for the monomial expansion of ``H_k(., C)``."""
    coeffs = np.abs(hermite_monomial_coeffs(k, C))
    ax = np.abs(np.asarray(x, dtype=float))
    return np.maximum(np.polynomial.polynomial.polyval(ax, coeffs), 1e-300)


def _rel(a, b, scale) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b)) / scale))


def recurrence_vs_explicit(kmax: int, xs: np.ndarray, Cs: np.ndarray) -> float:
    worst = 0.0
    for C in Cs:
        for k in range(kmax + 1):
            worst = max(worst, _rel(hermite_eval(k, xs, C), hermite_explicit(k, xs, C), hermite_scale(k, xs, C)))
    return worst


def binomial_shift(kmax: int, xs: np.ndarray, Cs: np.ndarray) -> float:
    """``H_k(x+y, C) = sum_l binom(k, l) H_l(x, C) y^{k-l}`` with ``y`` drawn from the same grid."""
    worst = 0.0
    ys = xs[::-1] * 0.5
    for C in Cs:
        table = hermite_table(kmax, xs, C)
        for k in range(kmax + 1):
            rhs = sum(comb(k, l) * table[l] * ys ** (k - l) for l in range(k + 1))
            lhs = hermite_eval(k, xs + ys, C)
            scale = sum(comb(k, l) * hermite_scale(l, xs, C) * np.abs(ys) ** (k - l) for l in range(k + 1))
            worst = max(worst, _rel(lhs, rhs, scale))
    return worst


def inversion(kmax: int, xs: np.ndarray, Cs: np.ndarray) -> float:
    """``x^k = sum_l c_l H_{k-2l}(x, C)``."""
    worst = 0.0
    for C in Cs:
        table = hermite_table(kmax, xs, C)
        for k in range(kmax + 1):
            coeffs = hermite_inverse_coeffs(k, C)
            rec = sum(c * table[k - 2 * l] for l, c in coeffs.items())
            scale = sum(abs(c) * hermite_scale(k - 2 * l, xs, C) for l, c in coeffs.items())
            worst = max(worst, _rel(rec, xs**k, np.maximum(scale, np.abs(xs) ** k)))
    return worst


def generating_function(xs: np.ndarray, Cs: np.ndarray, terms: int = 30) -> float:
    """Absolute error of ``sum_{k <= terms} t^k H_k / k!`` against ``exp(t x - C t^2 / 2)`` for ``|t| <= 1``."""
    worst = 0.0
    ts = np.linspace(-1.0, 1.0, 9)
    for C in Cs:
        table = hermite_table(terms, xs, C)
        for t in ts:
            s = sum(t**k * table[k] / factorial(k) for k in range(terms + 1))
            worst = max(worst, float(np.max(np.abs(s - np.exp(t * xs - C * t * t / 2)))))
    return worst


def complex_reduction(kmax: int = 8) -> float:
    z = np.array([0.3 + 1.1j, -1.7 + 0.2j, 2.0 - 0.5j])
    worst = 0.0
    for k in range(kmax + 1):
        worst = max(worst, _rel(complex_hermite_eval(k, 0, z, 1.3), z**k, np.maximum(np.abs(z) ** k, 1.0)))
    return worst


def hermite_identity_report(kmax: int = 10, points: int = 61, c_max: float = 4.0) -> dict[str, float]:
    """Worst relative residual of each identity over ``|x| <= 3`` and ``C`` in ``[0, c_max]``."""
    xs = np.linspace(-3.0, 3.0, points)
    Cs = np.linspace(0.0, c_max, 9)
    return {
        "recurrence_vs_explicit": recurrence_vs_explicit(max(kmax, 12), xs, Cs),
        "binomial_shift": binomial_shift(kmax, xs, Cs),
        "inversion": inversion(kmax, xs, Cs),
        "complex_reduction": complex_reduction(),
    }

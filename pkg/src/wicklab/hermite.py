"""Real and complex Hermite polynomials with a variance parameter.

``H_k(x, C)`` is generated by ``exp(t x - C t^2 / 2) = sum_k t^k H_k(x, C) / k!``.
Evaluation uses the three-term recurrence; the explicit alternating sum is
kept for cross-checking only.
"""
from __future__ import annotations

from math import comb, factorial

import numpy as np

MAX_DEGREE = 64


def _check_degree(k: int) -> None:
    if k < 0:
        raise ValueError(f"degree must be nonnegative, got {k}")
    if k > MAX_DEGREE:
        raise ValueError(f"degree {k} exceeds supported maximum {MAX_DEGREE}")


def _check_variance(C: float) -> None:
    if C < 0:
        raise ValueError(f"variance parameter must be nonnegative, got {C}")


def hermite_eval(k: int, x, C: float = 1.0):
    """Evaluate ``H_k(x, C)``; ``x`` may be a scalar or an array.

    Uses ``H_{k+1} = x H_k - k C H_{k-1}`` starting from ``H_0 = 1``,
    ``H_1 = x``.
    """
    _check_degree(k)
    _check_variance(C)
    x = np.asarray(x)
    prev = np.ones_like(x, dtype=np.result_type(x, float))
    if k == 0:
        return prev if prev.ndim else prev.item()
    cur = x.astype(prev.dtype, copy=True)
    for j in range(1, k):
        prev, cur = cur, x * cur - j * C * prev
    return cur if cur.ndim else cur.item()


def hermite_table(kmax: int, x, C: float = 1.0) -> list:
    """All of ``H_0(x, C), ..., H_kmax(x, C)`` from one recurrence sweep."""
    _check_degree(kmax)
    _check_variance(C)
    x = np.asarray(x)
    dtype = np.result_type(x, float)
    out = [np.ones_like(x, dtype=dtype)]
    if kmax >= 1:
        out.append(x.astype(dtype, copy=True))
    for j in range(1, kmax):
        out.append(x * out[j] - j * C * out[j - 1])
    return out


def hermite_explicit(k: int, x, C: float = 1.0):
    """Explicit sum ``k! sum_l (-C)^l x^(k-2l) / (2^l l! (k-2l)!)``."""
    _check_degree(k)
    _check_variance(C)
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for l in range(k // 2 + 1):
        c = factorial(k) // (2**l * factorial(l) * factorial(k - 2 * l))
        total = total + c * (-C) ** l * x ** (k - 2 * l)
    return total if total.ndim else total.item()


def hermite_monomial_coeffs(k: int, C: float = 1.0) -> np.ndarray:
    """Coefficients of ``H_k(., C)`` in the monomial basis, lowest degree first."""
    _check_degree(k)
    _check_variance(C)
    out = np.zeros(k + 1)
    for l in range(k // 2 + 1):
        c = factorial(k) // (2**l * factorial(l) * factorial(k - 2 * l))
        out[k - 2 * l] = c * (-C) ** l
    return out


def hermite_inverse_coeffs(k: int, C: float = 1.0) -> dict[int, float]:
    """Coefficients ``c_l`` with ``x^k = sum_l c_l H_{k-2l}(x, C)``.

    ``c_l = k! C^l / (2^l l! (k-2l)!)``; the integer part is exact.
    """
    _check_degree(k)
    _check_variance(C)
    out = {}
    for l in range(k // 2 + 1):
        c = factorial(k) // (2**l * factorial(l) * factorial(k - 2 * l))
        out[l] = float(c) * C**l
    return out


def complex_hermite_eval(k: int, l: int, z, c: float = 1.0):
    """Evaluate the complex Hermite polynomial ``H_{k,l}(z, c)``.

    ``sum_m m! binom(k,m) binom(l,m) (-c)^m z^(k-m) conj(z)^(l-m)``.
    """
    _check_degree(k)
    _check_degree(l)
    _check_variance(c)
    z = np.asarray(z, dtype=complex)
    zb = np.conj(z)
    total = np.zeros_like(z)
    for m in range(min(k, l) + 1):
        coef = factorial(m) * comb(k, m) * comb(l, m)
        total = total + coef * (-c) ** m * z ** (k - m) * zb ** (l - m)
    return total if total.ndim else complex(total)


def wick_basis_change(powers, C: float = 1.0, inverse: bool = False) -> np.ndarray:
    """Change basis between monomials ``x^k`` and Hermite ``H_k(., C)``.

    With ``inverse=False`` the input is a monomial coefficient vector and the
    result is the Hermite coefficient vector representing the same
    polynomial. ``inverse=True`` goes the other way.
    """
    p = np.asarray(powers, dtype=float)
    _check_variance(C)
    out = np.zeros_like(p)
    for k, a in enumerate(p):
        if a == 0:
            continue
        if inverse:
            out[: k + 1] += a * hermite_monomial_coeffs(k, C)
        else:
            for l, c in hermite_inverse_coeffs(k, C).items():
                out[k - 2 * l] += a * c
    return out

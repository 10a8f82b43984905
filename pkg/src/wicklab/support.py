"""Moment-matched profiles, dilated shift functions and the binomial shift map.

The profile ``f`` is a real trigonometric polynomial with
``int f^k = b_k`` for ``k = 1..2N`` (``b_k = (k-1)!!`` for even ``k``, 0 for
odd ``k``), which forces ``int H_k(f) = 0`` for ``k = 1..2N``.  It is built by
damped Newton from the band-limited boundary-damped profile
``g(a, x) = sqrt(2 log(1/x1)) cos(pi x2) exp(-a^2 (...))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy import integrate, special

from .besov import holder_norm
from .errors import NoConvergence, ResolutionError
from .fourier import (
    GridField,
    SpectralField,
    analyze,
    analyze_array,
    fine_resolution,
    grid_points,
    lattice_norm2,
    scale_lambda,
    synthesize,
    synthesize_array,
)
from .hermite import hermite_eval, hermite_table
from .she import WickFamily, stationary_sample, variance_R
from .parallel import ordered_map


def double_factorial(k: int) -> int:
    """``k!!`` with ``(-1)!! = 0!! = 1``."""
    return math.prod(range(k, 0, -2)) if k > 0 else 1


def _damping(a: float, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        s = x1**-0.5 + (1 - x1) ** -0.5 + x2**-0.5 + (1 - x2) ** -0.5
    return np.exp(-(a * a) * s)


def profile_values(a: float, x1, x2) -> np.ndarray:
    """``g(a, x)`` at interior points; 0 on the lines ``x1 = 0`` and ``x2 = 0``.

    ``a = 0`` gives the undamped (non-smooth) profile.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    interior = (x1 > 0) & (x1 < 1) & (x2 > 0) & (x2 < 1)
    safe1 = np.where(interior, x1, 0.5)
    safe2 = np.where(interior, x2, 0.5)
    v = np.sqrt(2.0 * np.log(1.0 / safe1)) * np.cos(np.pi * safe2)
    if a != 0:
        v = v * _damping(a, safe1, safe2)
    return np.where(interior, v, 0.0)


def base_profile(a: float, P: int) -> GridField:
    """Samples of ``g(a, .)`` at ``(i/P, j/P)``; the boundary lines take their limit 0."""
    if not 0 < a < 1:
        raise ValueError(f"smoothing parameter must lie in (0, 1), got {a}")
    x1, x2 = grid_points(P)
    return GridField(profile_values(a, x1, x2))


def moment_targets(N: int) -> dict[int, float]:
    """``b_k`` for ``k = 1..2N``: 0 for odd ``k``, ``(k-1)!!`` for even ``k``."""
    if N < 1:
        raise ValueError("order must be at least 1")
    return {k: 0.0 if k % 2 else float(double_factorial(k - 1)) for k in range(1, 2 * N + 1)}


def log_moment(k: int, method: str = "laguerre") -> float:
    """``int_0^1 (2 log(1/x))^k dx``, which equals ``(2k)!!``."""
    if method == "laguerre":
        # x = e^{-y}: int_0^inf (2y)^k e^{-y} dy, exact for k + 1 nodes
        y, w = special.roots_laguerre(k // 2 + 2)
        return float(np.sum(w * (2.0 * y) ** k))
    if method == "quad":
        val, _ = integrate.quad(lambda x: (2.0 * math.log(1.0 / x)) ** k, 0.0, 1.0, limit=200, epsabs=1e-13, epsrel=1e-13)
        return float(val)
    raise ValueError(f"unknown method {method!r}")


def cos_moment(k: int, method: str = "trapezoid") -> float:
    """``int_0^1 cos(pi x)^{2k} dx``, which equals ``(2k-1)!! / (2k)!!``."""
    if method == "trapezoid":
        # periodic trigonometric polynomial of degree k: equal weights are exact for P > k
        P = 2 * k + 2
        x = np.arange(P) / P
        return float(np.mean(np.cos(np.pi * x) ** (2 * k)))
    if method == "quad":
        val, _ = integrate.quad(lambda x: math.cos(math.pi * x) ** (2 * k), 0.0, 1.0, epsabs=1e-14, epsrel=1e-14)
        return float(val)
    raise ValueError(f"unknown method {method!r}")


@dataclass
class MomentProfile:
    field: SpectralField = field(repr=False)
    N: int
    a: np.ndarray
    residuals: dict
    iterations: int = 0
    quadrature_drift: float = 0.0

    def grid(self, P: int | None = None) -> GridField:
        return synthesize(self.field, P or fine_resolution(2 * self.N * self.field.n))

    @property
    def radius(self) -> int:
        return self.field.n


def hermite_moments(f: SpectralField, kmax: int, C: float = 1.0, P: int | None = None) -> dict[int, float]:
    """``int H_k(f(x), C) dx`` for ``k = 1..kmax`` by equal-weight quadrature.

    Exact for the trigonometric polynomial ``f`` once ``P > kmax * n``.
    """
    P = P or fine_resolution(kmax * f.n)
    if P <= kmax * f.n:
        raise ResolutionError(f"P={P} too small for degree {kmax} moments of radius {f.n}")
    v = synthesize(f, P).values
    table = hermite_table(kmax, v, C)
    return {k: float(table[k].mean()) for k in range(1, kmax + 1)}


def power_moments(v: np.ndarray, kmax: int) -> np.ndarray:
    out = np.empty(kmax)
    p = np.ones_like(v)
    for k in range(kmax):
        p = p * v
        out[k] = p.mean()
    return out


def _dual_basis(base: SpectralField, count: int, P: int) -> list[SpectralField]:
    """Band-limited ``phi_i`` with ``int phi_i * j base^{j-1} = delta_ij`` (``i, j = 1..count``)."""
    n = base.n
    v = synthesize(base, P).values
    psis = [analyze(GridField(j * v ** (j - 1)), n) for j in range(1, count + 1)]
    A = np.array([p.coeffs.ravel() for p in psis])
    G = np.real(A @ np.conj(A).T)
    Ginv = np.linalg.inv(G)
    return [SpectralField(n, np.tensordot(Ginv[i], np.array([p.coeffs for p in psis]), axes=1), hermitian=True) for i in range(count)]


def match_moments(
    N: int,
    a0: float = 0.05,
    tol: float = 1e-8,
    radius: int = 32,
    P_base: int = 1024,
    max_iter: int = 50,
) -> MomentProfile:
    """Damped Newton for ``int f^k = b_k``, ``k = 1..2N``, with ``f = base + sum_i a_i phi_i``.

    ``base`` is the radius-``radius`` Fourier truncation of ``g(a0, .)``
    (coefficients by trapezoid at ``P_base``); ``phi_i`` is the dual basis to
    ``j base^{j-1}``, so the Jacobian at the start is the identity.
    """
    if N < 1 or N > 4:
        raise ValueError(f"order N must lie in 1..4, got {N}")
    if not 0 < a0 <= 0.05:
        raise ValueError(f"smoothing parameter a0 must lie in (0, 0.05], got {a0}")
    K = 2 * N
    base = analyze(base_profile(a0, P_base), radius)
    coarse = analyze(base_profile(a0, P_base // 2), radius)
    drift = float(np.abs(base.coeffs - coarse.coeffs).max())

    P = fine_resolution(K * radius)
    phis = _dual_basis(base, K, P)
    vb = synthesize(base, P).values
    vphi = np.stack([synthesize(p, P).values for p in phis])
    target = np.array([moment_targets(N)[k] for k in range(1, K + 1)])

    def residual(a):
        v = vb + np.tensordot(a, vphi, axes=1)
        return power_moments(v, K) - target, v

    def jacobian(v):
        J = np.empty((K, K))
        p = np.ones_like(v)
        for k in range(1, K + 1):
            # d/da_i int f^k = k int f^{k-1} phi_i
            J[k - 1] = k * np.mean(p * vphi, axis=(-2, -1))
            p = p * v
        return J

    a = np.zeros(K)
    F, v = residual(a)
    it = 0
    for it in range(1, max_iter + 1):
        if np.max(np.abs(F)) < 1e-13:
            break
        step = np.linalg.solve(jacobian(v), -F)
        t = 1.0
        while True:
            a_new = a + t * step
            F_new, v_new = residual(a_new)
            if np.linalg.norm(F_new) < np.linalg.norm(F) or t < 1e-6:
                break
            t *= 0.5
        if t < 1e-6:
            raise NoConvergence(f"Newton line search stalled at residual {np.max(np.abs(F)):.3e}")
        a, F, v = a_new, F_new, v_new
    f = analyze(GridField(v), radius)
    res = hermite_moments(f, K)
    if max(abs(r) for r in res.values()) > tol:
        raise NoConvergence(f"moment residual {max(abs(r) for r in res.values()):.3e} above tolerance {tol:.1e}")
    return MomentProfile(field=f, N=N, a=np.concatenate([[a0], a]), residuals=res, iterations=it, quadrature_drift=drift)


def dilation_scale(n: int) -> int:
    """``l_n = floor((log n)^{log log n})`` with natural logs, floored at 1; needs ``n >= 3``."""
    if n < 3:
        raise IndexError(f"dilation scale needs n >= 3, got {n}")
    L = math.log(n)
    return max(1, math.floor(L ** math.log(L)))


@dataclass
class ShiftFunction:
    """``h_n(t) = sqrt(C_n) sum_m a_m (1 - exp(-lambda_{n,m}(t+1))) e_{l_n m}``."""

    n: int
    C_n: float
    base: MomentProfile = field(repr=False)

    def __post_init__(self):
        if self.C_n < 0:
            raise ValueError("variance budget must be nonnegative")
        self.l_n = dilation_scale(self.n)

    def decay_factors(self, t: float) -> np.ndarray:
        lam = 1.0 + 4.0 * np.pi**2 * self.l_n**2 * lattice_norm2(self.base.radius)
        return -np.expm1(-lam * (t + 1.0))

    def at(self, t: float) -> SpectralField:
        f = self.base.field
        g = SpectralField(f.n, np.sqrt(self.C_n) * f.coeffs * self.decay_factors(t), hermitian=True)
        return scale_lambda(g, self.l_n)

    def limit(self) -> SpectralField:
        """``sqrt(C_n) f(l_n .)``, the ``t -> infinity`` profile."""
        return scale_lambda(self.base.field.scale(np.sqrt(self.C_n)), self.l_n)


def build_shift(n: int, C_n: float, base: MomentProfile, t: float) -> SpectralField:
    return ShiftFunction(n, C_n, base).at(t)


def hermite_of_field(h: SpectralField, k: int, C: float) -> SpectralField:
    """``H_k(h(.), C)`` as a band-limited field of radius ``k * n``."""
    n = max(k, 1) * h.n
    P = fine_resolution(n)
    v = synthesize(h, P).values
    return analyze(GridField(hermite_eval(k, v, C)), n)


def shift_vanishing_norm(h: SpectralField, C_n: float, k: int, alpha: float) -> float:
    """``|| H_k(h, C_n) ||_{C^{-alpha}}``."""
    if k < 1:
        raise ValueError("order must be at least 1")
    return holder_norm(hermite_of_field(h, k, C_n), -alpha)


def _family_bandwidth(family: WickFamily) -> int:
    return family.kmax * family.n


def shift_family(h, family: WickFamily) -> WickFamily:
    """``(T_h z)_k = sum_{l <= k} binom(k, l) z_l h^{k-l}``, pointwise on the family's grid.

    ``h`` is a :class:`SpectralField` (synthesized on the family grid) or a
    :class:`GridField` of matching resolution.
    """
    P = family.P
    if isinstance(h, SpectralField):
        need = family.kmax * max(family.n, h.n)
        if P <= 2 * need:
            raise ResolutionError(f"family grid P={P} cannot hold shifted members of bandwidth {need}")
        hv = synthesize(h, P).values
    else:
        hv = np.asarray(h.values)
        if hv.shape[-1] != P:
            raise ValueError("shift and family grids differ")
    z = [m.values for m in family.members]
    powers = [np.ones_like(hv)]
    for _ in range(family.kmax):
        powers.append(powers[-1] * hv)
    out = []
    for k in range(family.kmax + 1):
        acc = sum(comb(k, l) * z[l] * powers[k - l] for l in range(k + 1))
        out.append(GridField(acc))
    return WickFamily(kmax=family.kmax, n=family.n, R=family.R, members=out)


def shifted_driver_distance(
    n: int,
    M: int,
    R: float,
    kmax: int,
    alpha: float,
    seed: int,
    profile: MomentProfile,
    t: float = 0.0,
    replica: int = 0,
) -> dict[int, float]:
    """``|| (T_{-Z_n - h_n} Z_M)_k - H_k(0, R) ||_{C^{-alpha}}`` for ``k = 1..kmax``.

    One stationary realization at truncation ``M`` stands in for ``Z``;
    ``Z_n`` is its projection and ``C_n = max(R_n - R, 0)``.
    """
    if not M >= n >= 3:
        raise ValueError(f"need M >= n >= 3, got n={n}, M={M}")
    state = stationary_sample(M, seed, 1, replica)
    C_n = max(variance_R(n) - R, 0.0)
    h = build_shift(n, C_n, profile, t)
    zn = SpectralField(n, state.projected(n)[0], hermitian=True)
    shift = -(zn + h)
    B = max(M, shift.n)
    P = fine_resolution(kmax * B)
    z = synthesize_array(state.modes[0], P).real
    fam = WickFamily(kmax=kmax, n=M, R=variance_R(M), members=[GridField(v) for v in hermite_table(kmax, z, variance_R(M))])
    shifted = shift_family(synthesize(shift, P), fam)
    out = {}
    for k in range(1, kmax + 1):
        diff = shifted[k].values - hermite_eval(k, 0.0, R)
        field_k = SpectralField(k * B, analyze_array(diff, k * B), hermitian=True)
        out[k] = holder_norm(field_k, -alpha)
    return out


def support_demo(ns, M_ratio: int, R: float, kmax: int, alpha: float, seeds: int, profile: MomentProfile, master_seed: int = 0):
    """Rows ``(n, k, mean distance, stderr)`` averaged over seeds derived from ``master_seed``."""
    rows = []
    for n in ns:
        results = ordered_map(
            lambda s: shifted_driver_distance(n, M_ratio * n, R, kmax, alpha, master_seed, profile, replica=s),
            range(seeds),
        )
        for k in range(1, kmax + 1):
            d = np.array([r[k] for r in results])
            se = d.std(ddof=1) / np.sqrt(len(d)) if len(d) > 1 else 0.0
            rows.append((n, k, float(d.mean()), float(se)))
    return rows

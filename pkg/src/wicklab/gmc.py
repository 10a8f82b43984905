"""Gaussian free field, L^2-phase Wick exponential and H^{-beta} second moments.

The fixed-time marginal ``X_n`` of the stationary heat equation is a truncated
massive free field.  Its Wick exponential ``exp(gamma X_n - gamma^2 R_n / 2)``
has mean one, and ``E || . ||^2_{H^{-beta}}`` is the series

    sum_m mu_m^{-beta} sum_k gamma^{2k} / k! (K_n^{*k})(m),    K_n(p) = 1 / (2 mu_p),

which is evaluated exactly through lattice convolutions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .errors import PhaseError, ValidationError
from .fourier import GridField, SpectralField, ball_mask, lattice_norm2, mode_rates, synthesize_array
from .lattice import LatticeKernel, heat_kernel, star
from .parallel import MeanVar, chunks, ordered_map
from .she import covariance_C, stationary_sample, variance_R

CRITICAL_GAMMA2 = 8.0 * math.pi
SERIES_TAIL = 1e-14


def check_phase(gamma: float) -> None:
    if not gamma * gamma < CRITICAL_GAMMA2:
        raise PhaseError(f"gamma^2 = {gamma * gamma:.6g} is outside the L2 phase (needs < 8 pi = {CRITICAL_GAMMA2:.6g})")


def check_regularity(gamma: float, beta: float) -> None:
    check_phase(gamma)
    lo = gamma * gamma / CRITICAL_GAMMA2
    if not lo < beta < 1:
        raise ValidationError("beta", f"must lie in ({lo:.6g}, 1) for gamma={gamma}, got {beta}")


@dataclass(frozen=True)
class GFFSample:
    n: int
    field: SpectralField = field(repr=False)
    R_n: float


def gff_sample(n: int, seed: int, replica: int = 0) -> GFFSample:
    """The stationary heat-equation marginal at a fixed time, for replica ``replica`` of ``seed``."""
    state = stationary_sample(n, seed, 1, replica)
    return GFFSample(n=n, field=state.field(0), R_n=variance_R(n))


def green_function(n: int, x) -> np.ndarray | float:
    """``G^(n)(x) = (1/2) sum_{|m| <= n} cos(2 pi m.x) / mu_m``."""
    return covariance_C(n, x)


def green_beta(beta: float, n: int, x) -> np.ndarray | float:
    """``G_beta^(n)(x) = sum_{|m| <= n} mu_m^{-beta} cos(2 pi m.x)`` (no factor 1/2)."""
    x = np.asarray(x, dtype=float)
    r = np.arange(-n, n + 1)
    m1, m2 = np.meshgrid(r, r, indexing="ij")
    mask = ball_mask(n)
    w = mode_rates(n)[mask] ** -beta
    phase = 2.0 * np.pi * (x[..., 0, None] * m1[mask] + x[..., 1, None] * m2[mask])
    out = np.sum(w * np.cos(phase), axis=-1)
    return out if out.ndim else float(out)


def chaos_resolution(n: int) -> int:
    """Grid size for exponentials of radius-``n`` fields; aliasing is below MC resolution."""
    return sfft.next_fast_len(max(32, 8 * n + 1))


@dataclass(frozen=True)
class ChaosField:
    gamma: float
    n: int
    grid: GridField = field(repr=False)
    beta: float | None = None

    def __post_init__(self):
        if self.beta is None:
            check_phase(self.gamma)
        else:
            check_regularity(self.gamma, self.beta)


def wick_exponential_values(modes: np.ndarray, gamma: float, P: int) -> np.ndarray:
    """``exp(gamma X - gamma^2 R_n / 2)`` on a ``P x P`` grid for a mode array (batch allowed)."""
    check_phase(gamma)
    n = (modes.shape[-1] - 1) // 2
    x = synthesize_array(modes, P).real
    return np.exp(gamma * x - 0.5 * gamma * gamma * variance_R(n))


def wick_exponential(X: GFFSample, gamma: float, beta: float | None = None, P: int | None = None) -> ChaosField:
    P = P or chaos_resolution(X.n)
    v = wick_exponential_values(X.field.coeffs, gamma, P)
    return ChaosField(gamma=gamma, n=X.n, grid=GridField(v), beta=beta)


def negative_sobolev_sq(values: np.ndarray, beta: float) -> np.ndarray:
    """``sum_m mu_m^{-beta} |F^(m)|^2`` from grid samples, over the full FFT square."""
    P = values.shape[-1]
    c = sfft.fft2(values, norm="forward")
    f = sfft.fftfreq(P, 1.0 / P)
    mu = 1.0 + 4.0 * np.pi**2 * (f[:, None] ** 2 + f[None, :] ** 2)
    return np.sum(mu**-beta * np.abs(c) ** 2, axis=(-2, -1))


def _series_terms(mass: float, strength: float, tail: float) -> int:
    """Smallest ``K`` with ``x^{K+1}/(K+1)! e^x < tail`` for ``x = strength * mass``."""
    x = strength * mass
    K = 0
    term = x
    while term * math.exp(x) >= tail:
        K += 1
        term *= x / (K + 1)
    return K


def exp_series_coefficients(K: LatticeKernel, strength: float, tail: float = SERIES_TAIL) -> LatticeKernel:
    """Fourier coefficients of ``exp(strength * C)`` where ``C^ = K``: ``sum_k strength^k / k! K^{*k}``.

    The series stops once the remaining mass ``sum_{k > K} (strength |K|)^k / k!`` is below ``tail``.
    """
    terms = _series_terms(K.mass(), strength, tail)
    power = LatticeKernel(0, np.ones((1, 1)))
    total = power.embed(terms * K.radius)
    for k in range(1, terms + 1):
        power = star(power, K)
        total += (strength**k / math.factorial(k)) * power.embed(terms * K.radius)
    return LatticeKernel(terms * K.radius, total)


def _h_minus_pairing(c: LatticeKernel, beta: float) -> float:
    mu = 1.0 + 4.0 * np.pi**2 * lattice_norm2(c.radius)
    return float(np.sum(mu**-beta * c.values))


def gmc_second_moment_analytic(n: int, gamma: float, beta: float, tail: float = SERIES_TAIL) -> float:
    """``E || :exp(gamma X_n): ||^2_{H^{-beta}}``."""
    check_regularity(gamma, beta)
    if gamma == 0:
        return 1.0
    return _h_minus_pairing(exp_series_coefficients(heat_kernel(0.0, n), gamma * gamma, tail), beta)


def annulus_kernel(N: int, M: int) -> LatticeKernel:
    """``1_{N < |p| <= M} / (2 mu_p)``."""
    if M < N:
        raise ValueError("need M >= N")
    K = heat_kernel(0.0, M).values.copy()
    inner = ball_mask(N)
    o = M - N
    K[o : o + 2 * N + 1, o : o + 2 * N + 1] *= ~inner
    return LatticeKernel(M, K)


def gmc_gap_to_one(N: int, M: int, gamma: float, beta: float, tail: float = SERIES_TAIL) -> float:
    """``E || :exp(gamma (X_M - X_N)): - 1 ||^2_{H^{-beta}}``; the ``k = 0`` term cancels the 1."""
    check_regularity(gamma, beta)
    if M == N or gamma == 0:
        return 0.0
    c = exp_series_coefficients(annulus_kernel(N, M), gamma * gamma, tail)
    return _h_minus_pairing(c, beta) - 1.0


def boosted_green_integral(N: int, strength: float, beta: float, oversample: int = 32) -> float:
    """``sum_m mu_m^{-beta} (exp(strength G^(N)))^(m)``, the pairing of ``exp(strength G^(N))`` with ``G_beta``.

    Coefficients come from an FFT of ``exp(strength G^(N))`` sampled at ``P = oversample * N``
    points per axis; no phase restriction applies, which is the point of the test.
    """
    P = sfft.next_fast_len(max(64, oversample * N))
    G = synthesize_array(heat_kernel(0.0, N).values.astype(complex), P).real
    return float(grid_multiplier_pairing(np.exp(strength * G), beta))


def grid_multiplier_pairing(values: np.ndarray, beta: float) -> float:
    """``sum_m mu_m^{-beta} F^(m)`` for grid samples of ``F``."""
    P = values.shape[-1]
    c = sfft.fft2(values, norm="forward").real
    f = sfft.fftfreq(P, 1.0 / P)
    mu = 1.0 + 4.0 * np.pi**2 * (f[:, None] ** 2 + f[None, :] ** 2)
    return float(np.sum(mu**-beta * c))


def integrability_exponent(strength: float, beta: float) -> float:
    """``strength / (4 pi) + 2 - 2 beta``; the boosted integral is finite iff this is below 2."""
    return strength / (4.0 * math.pi) + 2.0 - 2.0 * beta


def gmc_shift(f, h: GridField, gamma: float) -> GridField:
    """``exp(gamma h) f`` pointwise."""
    grid = f.grid if isinstance(f, ChaosField) else f
    if grid.values.shape[-2:] != h.values.shape[-2:]:
        raise ValueError("shift and field grids differ")
    return GridField(np.exp(gamma * h.values) * grid.values)


def positivity_check(f) -> bool:
    grid = f.grid if isinstance(f, ChaosField) else f
    return bool(np.all(grid.values >= 0))


@dataclass
class ChaosMonteCarlo:
    """MC summaries of ``:exp(gamma X_n):`` over replicas ``0..replicas-1``."""

    norm_sq: MeanVar
    point_mean: MeanVar
    two_point: MeanVar
    positive: int
    replicas: int


def chaos_monte_carlo(
    n: int, gamma: float, beta: float, replicas: int, seed: int, offset=(0, 0), batch: int = 1000, P: int | None = None
) -> ChaosMonteCarlo:
    """Samples ``||F||^2_{H^{-beta}}``, ``F(0)`` and ``F(0) F(offset / P)``, plus the positive-sample count."""
    check_regularity(gamma, beta)
    P = P or chaos_resolution(n)

    def work(span):
        lo, hi = span
        st = stationary_sample(n, seed, hi - lo, lo)
        v = wick_exponential_values(st.modes, gamma, P)
        return (
            negative_sobolev_sq(v, beta),
            v[:, 0, 0],
            v[:, 0, 0] * v[:, offset[0], offset[1]],
            int(np.sum(np.all(v >= 0, axis=(-2, -1)))),
        )

    norm_sq, point, two = MeanVar(), MeanVar(), MeanVar()
    positive = 0
    for a, b, c, d in ordered_map(work, chunks(replicas, batch)):
        norm_sq.add_batch(a)
        point.add_batch(b)
        two.add_batch(c)
        positive += d
    return ChaosMonteCarlo(norm_sq, point, two, positive, replicas)


def boosted_increment_ratios(strength: float, beta: float, Ns=(4, 8, 16, 32, 64)) -> list[float]:
    """Ratios of successive increments of the boosted integral along doubling ``N``.

    Ratios settle near ``2^{exponent - 2}``: at or above 1 the integral grows
    without bound, below 1 it converges.
    """
    vals = [boosted_green_integral(N, strength, beta) for N in Ns]
    inc = np.diff(vals)
    return [float(b / a) for a, b in zip(inc, inc[1:])]

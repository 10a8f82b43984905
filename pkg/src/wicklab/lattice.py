"""Convolution algebra of symmetric nonnegative kernels on Z^2.

Kernels are dense ``(2r+1, 2r+1)`` arrays centred on the origin.  A kernel
that stands for the truncation of an infinite one carries ``tail_exponent``:
beyond its radius it is bounded by ``tail_constant / (1 + |m|^2)^tail_exponent``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import signal

from .besov import DyadicPartition, partition_for
from .errors import HypothesisViolation
from .fourier import ball_mask, lattice_norm2


@dataclass(frozen=True)
class LatticeKernel:
    radius: int
    values: np.ndarray = field(repr=False)
    truncated: bool = False
    tail_exponent: float | None = None
    tail_constant: float | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (2 * self.radius + 1,) * 2:
            raise ValueError(f"kernel array shape {v.shape} does not match radius {self.radius}")
        if not np.allclose(v, v[::-1, ::-1], rtol=1e-12, atol=1e-300):
            raise ValueError("kernel must be symmetric under m -> -m")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __call__(self, m) -> float:
        m1, m2 = m
        r = self.radius
        if abs(m1) > r or abs(m2) > r:
            return 0.0
        return float(self.values[m1 + r, m2 + r])

    def mass(self) -> float:
        return float(self.values.sum())

    def embed(self, radius: int) -> np.ndarray:
        if radius < self.radius:
            raise ValueError("cannot embed into a smaller radius")
        out = np.zeros((2 * radius + 1,) * 2)
        o = radius - self.radius
        out[o : o + 2 * self.radius + 1, o : o + 2 * self.radius + 1] = self.values
        return out

    def restrict(self, N: int) -> "LatticeKernel":
        """``(K)_N``: zero outside ``|m| <= N``."""
        if N >= self.radius:
            return self
        r = self.radius
        v = self.values[r - N : r + N + 1, r - N : r + N + 1] * ball_mask(N)
        return LatticeKernel(N, v)


def delta_kernel() -> LatticeKernel:
    return LatticeKernel(0, np.ones((1, 1)))


def uniform_kernel(radius: int) -> LatticeKernel:
    return LatticeKernel(radius, np.ones((2 * radius + 1,) * 2))


def star(K1: LatticeKernel, K2: LatticeKernel) -> LatticeKernel:
    """``(K1 * K2)(m) = sum_l K1(m - l) K2(l)``; result radius ``r1 + r2``."""
    if K1.radius == 0:
        return LatticeKernel(K2.radius, K1.values[0, 0] * K2.values)
    if K2.radius == 0:
        return LatticeKernel(K1.radius, K2.values[0, 0] * K1.values)
    out = signal.convolve(K1.values, K2.values, mode="full")
    # fft convolution leaves roundoff of either sign; kernels are nonnegative
    np.maximum(out, 0.0, out=out)
    out = 0.5 * (out + out[::-1, ::-1])
    return LatticeKernel(K1.radius + K2.radius, out)


def star_power(K: LatticeKernel, k: int) -> LatticeKernel:
    """k-fold convolution of ``K`` with itself; ``k = 0`` gives the unit kernel."""
    if k < 0:
        raise ValueError("star exponent must be nonnegative")
    out = delta_kernel()
    for _ in range(k):
        out = star(out, K)
    return out


def heat_kernel(t: float, N: int) -> LatticeKernel:
    """``K(t, p) = exp(-I_p |t|) / (2 I_p)`` on ``|p| <= N``, ``I_p = 1 + 4 pi^2 |p|^2``."""
    if N < 0:
        raise ValueError("truncation must be nonnegative")
    I = 1.0 + 4.0 * np.pi**2 * lattice_norm2(N)
    v = np.exp(-I * abs(t)) / (2.0 * I) * ball_mask(N)
    return LatticeKernel(N, v)


def heat_kernel_truncation(t: float, N: int) -> LatticeKernel:
    """Radius-``N`` piece of the infinite heat kernel, with its analytic tail bound.

    ``K(t, m) <= 1/(2(1 + |m|^2))`` since ``I_m >= 1 + |m|^2``.
    """
    K = heat_kernel(t, N)
    return LatticeKernel(N, K.values, truncated=True, tail_exponent=1.0, tail_constant=0.5)


@lru_cache(maxsize=256)
def _heat_star_power(t: float, N: int, k: int) -> LatticeKernel:
    if k == 0:
        return delta_kernel()
    return star(_heat_star_power(t, N, k - 1), heat_kernel(t, N))


def heat_star_power(t: float, N: int, k: int) -> LatticeKernel:
    """Cached ``heat_kernel(t, N)^{*k}``."""
    return _heat_star_power(float(abs(t)), int(N), int(k))


def weight_table(radius: int, exponent: float) -> np.ndarray:
    return (1.0 + lattice_norm2(radius)) ** exponent


def hypothesis_constant(K: LatticeKernel, exponent: float) -> float:
    """Smallest ``C`` with ``K(m) <= C / (1 + |m|^2)^exponent`` on the stored values."""
    return float((K.values * weight_table(K.radius, exponent)).max())


def _check_tail(K: LatticeKernel, exponent: float, name: str) -> None:
    if not K.truncated:
        return
    if K.tail_exponent is None:
        raise HypothesisViolation(f"{name} is a truncated infinite kernel without a declared tail exponent")
    if K.tail_exponent < exponent:
        raise HypothesisViolation(f"{name} tail decays like exponent {K.tail_exponent} < required {exponent}")


def verify_decay_bound(
    K1: LatticeKernel,
    K2: LatticeKernel,
    alpha: float,
    beta: float,
    m_range: int,
    C: float | None = None,
) -> float:
    """Empirical ``C' = max_{|m| <= m_range} (K1 * K2)(m) (1 + |m|^2)^{alpha+beta-1}``.

    With ``C`` given, the inputs must satisfy ``K1 <= C (1+|m|^2)^-alpha`` and
    ``K2 <= C (1+|m|^2)^-beta``; a violation raises.
    """
    if not (0 < alpha < 1 and 0 < beta < 1 and alpha + beta > 1):
        raise HypothesisViolation(f"need alpha, beta in (0,1) with alpha+beta > 1, got {alpha}, {beta}")
    _check_tail(K1, alpha, "K1")
    _check_tail(K2, beta, "K2")
    if C is not None:
        for K, e, name in ((K1, alpha, "K1"), (K2, beta, "K2")):
            c = hypothesis_constant(K, e)
            if c > C * (1 + 1e-12):
                raise HypothesisViolation(f"{name} exceeds C/(1+|m|^2)^{e}: needs constant {c:.6g} > {C:.6g}")
    conv = star(K1, K2)
    r = min(m_range, conv.radius)
    R = conv.radius
    window = conv.values[R - r : R + r + 1, R - r : R + r + 1] * ball_mask(r)
    return float((window * weight_table(r, alpha + beta - 1)).max())


def truncation_gap_constant(K1: LatticeKernel, K2: LatticeKernel, N: int, alpha: float, beta: float) -> float:
    """``max_m |K1*K2 - K1*(K2)_N|(m) (1 + max(|m|, N)^2)^{alpha+beta-1}``.

    ``K2`` should extend well past ``N``; it stands in for the untruncated kernel.
    """
    full = star(K1, K2)
    cut = star(K1, K2.restrict(N))
    R = full.radius
    diff = np.abs(full.values - cut.embed(R))
    rr = np.maximum(np.sqrt(lattice_norm2(R)), N)
    return float((diff * (1.0 + rr**2) ** (alpha + beta - 1)).max())


def heat_time_regularity_constant(ts, N: int, gamma: float) -> float:
    """``max |K(t,m) - K(0,m)| / (t^gamma (1+|m|^2)^{gamma-1})`` over ``t`` in ``ts``, ``|m| <= N``."""
    K0 = heat_kernel(0.0, N).values
    w = weight_table(N, gamma - 1) * ball_mask(N)
    worst = 0.0
    for t in ts:
        if t <= 0:
            continue
        d = np.abs(heat_kernel(t, N).values - K0)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(w > 0, d / (t**gamma * np.where(w > 0, w, 1.0)), 0.0)
        worst = max(worst, float(ratio.max()))
    return worst


def _block_weights_sq(part: DyadicPartition, j: int, radius: int) -> np.ndarray:
    return part.multiplier(j, radius) ** 2


def _mixed_difference(n: int, M: int, k: int, l: int, dt: float) -> LatticeKernel | None:
    if M < n:
        raise ValueError("need M >= n")
    if k + l < 1:
        raise ValueError("need k + l >= 1")
    if M == n or l == 0:
        return None
    mixed = star(heat_star_power(dt, n, k), heat_star_power(dt, M, l))
    pure = heat_star_power(dt, n, k + l)
    R = mixed.radius
    return LatticeKernel(R, mixed.values - pure.embed(R))


def mixed_wick_gap(
    n: int, M: int, k: int, l: int, dt: float, j: int, part: DyadicPartition | None = None
) -> float:
    """``sum_p chi_j(p)^2 [(K_n^{*k} * K_M^{*l})(p) - K_n^{*(k+l)}(p)]`` with ``K = K(dt)``."""
    diff = _mixed_difference(n, M, k, l, dt)
    if diff is None:
        return 0.0
    part = part or partition_for(diff.radius)
    part.check_coverage(diff.radius)
    return float(np.sum(_block_weights_sq(part, j, diff.radius) * diff.values))


def weighted_mixed_gap(n: int, M: int, k: int, l: int, alpha: float, dt: float = 0.0) -> float:
    """``sum_j 2^{-2 j alpha} mixed_wick_gap(n, M, k, l, dt, j)`` over all blocks."""
    diff = _mixed_difference(n, M, k, l, dt)
    if diff is None:
        return 0.0
    part = partition_for(diff.radius)
    total = 0.0
    for j in part.indices:
        total += 2.0 ** (-2 * j * alpha) * float(np.sum(_block_weights_sq(part, j, diff.radius) * diff.values))
    return total


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])


def kernel_decay_table(ns, k: int, l: int, alpha: float, ratio: int = 2):
    """Rows ``(n, weighted gap)`` and the fitted log-log slope."""
    gaps = [weighted_mixed_gap(n, ratio * n, k, l, alpha) for n in ns]
    slope = loglog_slope(ns, gaps) if len(ns) > 1 and min(gaps) > 0 else math.nan
    return list(zip(ns, gaps)), slope

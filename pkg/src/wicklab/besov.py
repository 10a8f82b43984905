"""Littlewood-Paley blocks, Besov and Sobolev norms, Bony paraproducts.

Blocks are Fourier multipliers.  ``theta`` is a smooth radial cutoff equal to
1 on ``|xi| <= 1`` and 0 on ``|xi| >= 4/3``; the partition is

    chi_{-1} = theta,    chi_k = theta(./2^{k+1}) - theta(./2^k),  k >= 0,

so ``chi_k`` is supported in ``2^k < |xi| < 8 2^k / 3`` and the sum telescopes
to ``theta(./2^{kmax+1})``, which is 1 on ``|xi| <= 2^{kmax+1}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .errors import CoverageError
from .fourier import (
    SpectralField,
    analyze_array,
    fine_resolution,
    lattice_norm2,
    mode_rates,
    synthesize_array,
)


def _psi(u: np.ndarray) -> np.ndarray:
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos])
    return out


def smooth_cutoff(r) -> np.ndarray:
    """C-infinity radial step: 1 for ``r <= 1``, 0 for ``r >= 4/3``."""
    r = np.asarray(r, dtype=float)
    s = (r - 1.0) * 3.0
    a, b = _psi(1.0 - s), _psi(s)
    return a / (a + b)


@lru_cache(maxsize=512)
def _multiplier(k: int, n: int) -> np.ndarray:
    r = np.sqrt(lattice_norm2(n))
    if k == -1:
        out = smooth_cutoff(r)
    else:
        out = smooth_cutoff(r / 2.0 ** (k + 1)) - smooth_cutoff(r / 2.0**k)
    out.setflags(write=False)
    return out


def block_radius(k: int) -> int:
    """Radius of a ball containing every lattice point in the support of ``chi_k``."""
    if k == -1:
        return 1
    return math.ceil(8 * 2**k / 3)


@dataclass(frozen=True)
class DyadicPartition:
    kmax: int

    def __post_init__(self):
        if self.kmax < 0:
            raise ValueError("kmax must be nonnegative")

    @property
    def indices(self) -> range:
        return range(-1, self.kmax + 1)

    @property
    def coverage(self) -> float:
        """Lattice points with ``|m|`` strictly below this are covered."""
        return 3 * 2**self.kmax / 4

    def multiplier(self, k: int, n: int) -> np.ndarray:
        """``chi_k(m)`` on the ``(2n+1)^2`` index square."""
        if k < -1 or k > self.kmax:
            raise IndexError(f"block {k} outside -1..{self.kmax}")
        return _multiplier(k, n)

    def chi(self, k: int, m) -> float:
        m1, m2 = m
        r = math.hypot(m1, m2)
        if k == -1:
            return float(smooth_cutoff(r))
        return float(smooth_cutoff(r / 2 ** (k + 1)) - smooth_cutoff(r / 2**k))

    def check_coverage(self, n: int) -> None:
        if n >= self.coverage:
            raise CoverageError(f"radius {n} not covered by partition with kmax={self.kmax} (need |m| < {self.coverage})")


def build_partition(kmax: int) -> DyadicPartition:
    return DyadicPartition(kmax)


def partition_for(n: int) -> DyadicPartition:
    """Partition with ``kmax = ceil(log2 n) + 2``, enough to cover radius ``n``."""
    if n <= 1:
        return DyadicPartition(2)
    return DyadicPartition(math.ceil(math.log2(n)) + 2)


@dataclass(frozen=True)
class BlockDecomposition:
    blocks: dict  # k -> SpectralField

    def total(self, n: int) -> SpectralField:
        out = SpectralField.zeros(n, hermitian=all(b.hermitian for b in self.blocks.values()))
        for b in self.blocks.values():
            out = out + b
        return out


def lp_blocks(f: SpectralField, part: DyadicPartition | None = None) -> BlockDecomposition:
    """``(Delta_k f)^(m) = chi_k(m) f^(m)``; block ``k`` is stored at its support radius."""
    part = part or partition_for(f.n)
    part.check_coverage(f.bandwidth())
    blocks = {}
    for k in part.indices:
        r = min(f.n, block_radius(k))
        c = f.coeffs[f.n - r : f.n + r + 1, f.n - r : f.n + r + 1] * part.multiplier(k, r)
        blocks[k] = SpectralField(r, c, f.hermitian)
    return BlockDecomposition(blocks)


def lp_norm(f: SpectralField, p) -> float:
    """``L^p`` norm on the torus for ``p`` in {1, 2, inf}.

    ``p=2`` is exact by Parseval; ``p=1`` and ``p=inf`` sample a grid of
    ``P >= 4n+1`` points per axis (the sup is a grid lower bound).
    """
    if p == 2:
        return float(np.sqrt(np.sum(np.abs(f.coeffs) ** 2)))
    P = sfft.next_fast_len(4 * f.n + 1)
    v = np.abs(synthesize_array(f.coeffs, P))
    if p == 1:
        return float(v.mean())
    if p in (np.inf, math.inf, "inf"):
        return float(v.max())
    raise ValueError(f"unsupported integrability exponent {p}")


def _lq(values: list[float], q) -> float:
    v = np.asarray(values)
    if q in (np.inf, math.inf, "inf"):
        return float(v.max(initial=0.0))
    if q == 1:
        return float(v.sum())
    if q == 2:
        return float(np.sqrt(np.sum(v**2)))
    raise ValueError(f"unsupported summability exponent {q}")


def block_norms(f: SpectralField, p, part: DyadicPartition | None = None) -> dict[int, float]:
    dec = lp_blocks(f, part)
    return {k: lp_norm(b, p) for k, b in dec.blocks.items()}


def besov_norm(f: SpectralField, alpha: float, p=np.inf, q=np.inf, part: DyadicPartition | None = None) -> float:
    """``|| (2^{alpha k} ||Delta_k f||_{L^p})_k ||_{l^q}``."""
    norms = block_norms(f, p, part)
    return _lq([2.0 ** (alpha * k) * v for k, v in norms.items()], q)


def holder_norm(f: SpectralField, alpha: float, part: DyadicPartition | None = None) -> float:
    return besov_norm(f, alpha, np.inf, np.inf, part)


def sobolev_norm(f: SpectralField, gamma: float) -> float:
    """``sqrt(sum_m (1 + 4 pi^2 |m|^2)^gamma |f^(m)|^2)``."""
    return float(np.sqrt(np.sum(mode_rates(f.n) ** gamma * np.abs(f.coeffs) ** 2)))


def _block_grids(f: SpectralField, part: DyadicPartition, P: int) -> dict[int, np.ndarray]:
    dec = lp_blocks(f, part)
    return {k: synthesize_array(b.coeffs, P) for k, b in dec.blocks.items()}


def _common(f: SpectralField, g: SpectralField, part: DyadicPartition | None):
    part = part or partition_for(max(f.n, g.n))
    n = f.n + g.n
    P = fine_resolution(n)
    return part, n, P


def _finish(values: np.ndarray, n: int, herm: bool) -> SpectralField:
    return SpectralField(n, analyze_array(values, n), herm)


def paraproduct_less(f: SpectralField, g: SpectralField, part: DyadicPartition | None = None) -> SpectralField:
    """``f < g = sum_{j < k-1} Delta_j f Delta_k g``."""
    part, n, P = _common(f, g, part)
    bf, bg = _block_grids(f, part, P), _block_grids(g, part, P)
    acc = np.zeros((P, P), dtype=complex)
    low = np.zeros((P, P), dtype=complex)
    for k in part.indices:
        if k - 2 >= -1:
            low = low + bf[k - 2]
        acc += low * bg[k]
    return _finish(acc, n, f.hermitian and g.hermitian)


def paraproduct_greater(f: SpectralField, g: SpectralField, part: DyadicPartition | None = None) -> SpectralField:
    return paraproduct_less(g, f, part)


def resonance(f: SpectralField, g: SpectralField, part: DyadicPartition | None = None) -> SpectralField:
    """``f o g = sum_{|j-k| <= 1} Delta_j f Delta_k g``."""
    part, n, P = _common(f, g, part)
    bf, bg = _block_grids(f, part, P), _block_grids(g, part, P)
    acc = np.zeros((P, P), dtype=complex)
    for j in part.indices:
        for k in (j - 1, j, j + 1):
            if k in bg:
                acc += bf[j] * bg[k]
    return _finish(acc, n, f.hermitian and g.hermitian)


def bony_decomposition(f: SpectralField, g: SpectralField, part: DyadicPartition | None = None):
    """``(f < g, f o g, f > g)``; the three terms sum to ``f g``."""
    part = part or partition_for(max(f.n, g.n))
    return paraproduct_less(f, g, part), resonance(f, g, part), paraproduct_greater(f, g, part)

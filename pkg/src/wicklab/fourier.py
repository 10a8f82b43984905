"""Truncated Fourier series on the 2-torus and their grid samples.

A :class:`SpectralField` stores the coefficients ``a_m`` for ``|m| <= n`` as a
dense ``(2n+1, 2n+1)`` array indexed by ``(m1 + n, m2 + n)``; entries outside
the Euclidean ball are kept at zero.  A :class:`GridField` holds samples at the
points ``(i/P, j/P)``; leading axes are allowed and act as a batch.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .errors import ResolutionError


@lru_cache(maxsize=256)
def ball_mask(n: int) -> np.ndarray:
    """Boolean mask of ``|m|^2 <= n^2`` on the ``(2n+1)^2`` index square."""
    r = np.arange(-n, n + 1)
    mask = r[:, None] ** 2 + r[None, :] ** 2 <= n * n
    mask.setflags(write=False)
    return mask


@lru_cache(maxsize=256)
def lattice_norm2(n: int) -> np.ndarray:
    """``|m|^2`` on the ``(2n+1)^2`` index square."""
    r = np.arange(-n, n + 1)
    out = (r[:, None] ** 2 + r[None, :] ** 2).astype(float)
    out.setflags(write=False)
    return out


def mode_rates(n: int) -> np.ndarray:
    """``mu_m = 1 + 4 pi^2 |m|^2`` on the index square."""
    return 1.0 + 4.0 * np.pi**2 * lattice_norm2(n)


def _is_hermitian(c: np.ndarray, atol: float = 0.0) -> bool:
    return bool(np.allclose(c, np.conj(c[::-1, ::-1]), rtol=0.0, atol=atol))


@dataclass(frozen=True)
class SpectralField:
    n: int
    coeffs: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if self.n < 0:
            raise ValueError("truncation radius must be nonnegative")
        if c.shape != (2 * self.n + 1, 2 * self.n + 1):
            raise ValueError(f"coefficient array has shape {c.shape}, expected {(2 * self.n + 1,) * 2}")
        c[~ball_mask(self.n)] = 0.0
        if self.hermitian:
            mirror = np.conj(c[::-1, ::-1])
            scale = max(1.0, float(np.abs(c).max(initial=0.0)))
            if not np.allclose(c, mirror, rtol=0.0, atol=1e-9 * scale):
                raise ValueError("coefficients flagged hermitian violate a_{-m} = conj(a_m)")
            # remove roundoff so the symmetry holds exactly
            c = 0.5 * (c + mirror)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, n: int, hermitian: bool = True) -> "SpectralField":
        return cls(n, np.zeros((2 * n + 1, 2 * n + 1), dtype=complex), hermitian)

    @classmethod
    def from_modes(cls, modes: dict, n: int | None = None, hermitian: bool | None = None) -> "SpectralField":
        """Build from ``{(m1, m2): amplitude}``."""
        if n is None:
            n = int(np.ceil(max((np.hypot(*m) for m in modes), default=0.0)))
        c = np.zeros((2 * n + 1, 2 * n + 1), dtype=complex)
        for (m1, m2), a in modes.items():
            if m1 * m1 + m2 * m2 > n * n:
                raise ValueError(f"mode {(m1, m2)} lies outside radius {n}")
            c[m1 + n, m2 + n] = a
        if hermitian is None:
            hermitian = _is_hermitian(c, atol=1e-15)
        return cls(n, c, hermitian)

    def __getitem__(self, m) -> complex:
        m1, m2 = m
        if m1 * m1 + m2 * m2 > self.n * self.n:
            return 0j
        return complex(self.coeffs[m1 + self.n, m2 + self.n])

    @property
    def mean(self) -> complex:
        return self[0, 0]

    def embed(self, n: int) -> "SpectralField":
        """Same field stored at a larger radius."""
        if n < self.n:
            raise ValueError("embed radius must not shrink the field")
        c = np.zeros((2 * n + 1, 2 * n + 1), dtype=complex)
        c[n - self.n : n + self.n + 1, n - self.n : n + self.n + 1] = self.coeffs
        return SpectralField(n, c, self.hermitian)

    def bandwidth(self) -> int:
        """Smallest radius whose ball contains every nonzero coefficient."""
        nz = np.nonzero(self.coeffs)
        if len(nz[0]) == 0:
            return 0
        r2 = (nz[0] - self.n) ** 2 + (nz[1] - self.n) ** 2
        return int(np.ceil(np.sqrt(r2.max()) - 1e-12))

    def __add__(self, other: "SpectralField") -> "SpectralField":
        n = max(self.n, other.n)
        return SpectralField(n, self.embed(n).coeffs + other.embed(n).coeffs, self.hermitian and other.hermitian)

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.n, -self.coeffs, self.hermitian)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return self + (-other)

    def scale(self, s: complex) -> "SpectralField":
        return SpectralField(self.n, s * self.coeffs, self.hermitian and np.isreal(s))

    def to_json(self) -> str:
        n = self.n
        rows = []
        for i, j in zip(*np.nonzero(ball_mask(n))):
            a = self.coeffs[i, j]
            rows.append([int(i - n), int(j - n), float(a.real), float(a.imag)])
        rows.sort(key=lambda r: (r[0], r[1]))
        return json.dumps({"n": n, "hermitian": self.hermitian, "coeffs": rows})

    @classmethod
    def from_json(cls, text: str) -> "SpectralField":
        obj = json.loads(text)
        n = int(obj["n"])
        c = np.zeros((2 * n + 1, 2 * n + 1), dtype=complex)
        for m1, m2, re, im in obj["coeffs"]:
            c[int(m1) + n, int(m2) + n] = complex(re, im)
        return cls(n, c, bool(obj["hermitian"]))


@dataclass(frozen=True)
class GridField:
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim < 2 or v.shape[-1] != v.shape[-2]:
            raise ValueError(f"grid values must end in a square P x P block, got {v.shape}")
        object.__setattr__(self, "values", v)

    @property
    def P(self) -> int:
        return self.values.shape[-1]

    def mean(self):
        return self.values.mean(axis=(-2, -1))

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.arange(self.P) / self.P
        return np.meshgrid(x, x, indexing="ij")


def grid_points(P: int) -> tuple[np.ndarray, np.ndarray]:
    x = np.arange(P) / P
    return np.meshgrid(x, x, indexing="ij")


def _scatter_indices(n: int, P: int) -> np.ndarray:
    return np.arange(-n, n + 1) % P


def synthesize_array(coeffs: np.ndarray, P: int) -> np.ndarray:
    """Grid samples of ``sum_m a_m e_m`` for coefficient arrays ``(..., 2n+1, 2n+1)``."""
    n = (coeffs.shape[-1] - 1) // 2
    if P <= 2 * n:
        raise ResolutionError(f"resolution P={P} must exceed 2n={2 * n}")
    spec = np.zeros(coeffs.shape[:-2] + (P, P), dtype=complex)
    idx = _scatter_indices(n, P)
    spec[..., idx[:, None], idx[None, :]] = coeffs
    return sfft.ifft2(spec, norm="forward")


def analyze_array(values: np.ndarray, n: int) -> np.ndarray:
    """Coefficients ``|m| <= n`` of grid samples ``(..., P, P)`` by equal-weight quadrature."""
    P = values.shape[-1]
    if P <= 2 * n:
        raise ResolutionError(f"resolution P={P} must exceed 2n={2 * n}")
    spec = sfft.fft2(values, norm="forward")
    idx = _scatter_indices(n, P)
    out = spec[..., idx[:, None], idx[None, :]]
    return np.where(ball_mask(n), out, 0.0)


def synthesize(f: SpectralField, P: int) -> GridField:
    values = synthesize_array(f.coeffs, P)
    if f.hermitian:
        values = values.real
    return GridField(values)


def analyze(g: GridField, n: int, hermitian: bool | None = None) -> SpectralField:
    if g.values.ndim != 2:
        raise ValueError("analyze expects a single grid; use analyze_array for batches")
    if hermitian is None:
        hermitian = not np.iscomplexobj(g.values)
    return SpectralField(n, analyze_array(g.values, n), hermitian)


def project(f: SpectralField, radius: int) -> SpectralField:
    """Galerkin projection onto ``|m| <= radius``."""
    if radius >= f.n:
        return f
    c = f.coeffs[f.n - radius : f.n + radius + 1, f.n - radius : f.n + radius + 1]
    return SpectralField(radius, c, f.hermitian)


def scale_lambda(f: SpectralField, lam: int) -> SpectralField:
    """Coefficients of ``x -> f(lam x)``: ``a_m`` moves to ``lam m``."""
    if lam < 1 or int(lam) != lam:
        raise ValueError(f"dilation factor must be a positive integer, got {lam}")
    lam = int(lam)
    n = f.n * lam
    c = np.zeros((2 * n + 1, 2 * n + 1), dtype=complex)
    c[::lam, ::lam] = f.coeffs
    return SpectralField(n, c, f.hermitian)


def fine_resolution(bandwidth: int) -> int:
    """A fast FFT length strictly above ``2 * bandwidth``."""
    return sfft.next_fast_len(2 * bandwidth + 1)


def multiply(f: SpectralField, g: SpectralField) -> SpectralField:
    """Coefficients of the pointwise product ``f g`` (radius ``n_f + n_g``, no aliasing)."""
    n = f.n + g.n
    P = fine_resolution(n)
    vf = synthesize_array(f.coeffs, P)
    vg = synthesize_array(g.coeffs, P)
    herm = f.hermitian and g.hermitian
    return SpectralField(n, analyze_array(vf * vg, n), herm)


def l2_norm(f: SpectralField) -> float:
    return float(np.sqrt(np.sum(np.abs(f.coeffs) ** 2)))

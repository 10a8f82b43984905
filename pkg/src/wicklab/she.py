"""Stationary Galerkin-truncated stochastic heat equation on the 2-torus.

Each Fourier mode ``a_m = <Z_n(t), e_m>`` of the stationary solution is an
Ornstein-Uhlenbeck process with rate ``mu_m = 1 + 4 pi^2 |m|^2`` and
stationary variance ``E|a_m|^2 = 1 / (2 mu_m)``, subject to ``a_{-m} = conj(a_m)``.
Transitions are sampled exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial

import numpy as np

from .errors import ResolutionError
from .fourier import GridField, SpectralField, analyze_array, ball_mask, mode_rates, synthesize_array
from .hermite import hermite_table
from .lattice import heat_star_power
from .parallel import replica_rng


def variance_R(n: int) -> float:
    """``R_n = E[Z_n(t, x)^2] = sum_{|m| <= n} 1 / (2 mu_m)``."""
    if n < 0:
        raise ValueError("truncation must be nonnegative")
    return float(np.sum(ball_mask(n) / (2.0 * mode_rates(n))))


def covariance_C(n: int, x) -> np.ndarray | float:
    """``E[Z_n(t, 0) Z_n(t, x)] = sum_{|m| <= n} cos(2 pi m.x) / (2 mu_m)``.

    ``x`` has a trailing axis of length 2.
    """
    x = np.asarray(x, dtype=float)
    r = np.arange(-n, n + 1)
    m1, m2 = np.meshgrid(r, r, indexing="ij")
    mask = ball_mask(n)
    m1, m2 = m1[mask], m2[mask]
    w = 1.0 / (2.0 * mode_rates(n)[mask])
    phase = 2.0 * np.pi * (x[..., 0, None] * m1 + x[..., 1, None] * m2)
    out = np.sum(w * np.cos(phase), axis=-1)
    return out if out.ndim else float(out)


@lru_cache(maxsize=64)
def _upper_half(n: int) -> np.ndarray:
    r = np.arange(-n, n + 1)
    m1, m2 = np.meshgrid(r, r, indexing="ij")
    upper = ((m1 > 0) | ((m1 == 0) & (m2 > 0))) & ball_mask(n)
    upper.setflags(write=False)
    return upper


def hermitian_normal(rng: np.random.Generator, n: int) -> np.ndarray:
    """Hermitian array with ``E|w_m|^2 = 1`` and a real standard normal at ``m = 0``.

    Draws one ``(2, 2n+1, 2n+1)`` block of standard normals; the entries over
    the lower half-plane are discarded.
    """
    g = rng.standard_normal((2, 2 * n + 1, 2 * n + 1))
    upper = _upper_half(n)
    w = np.where(upper, (g[0] + 1j * g[1]) / np.sqrt(2.0), 0.0)
    w = w + np.conj(w[::-1, ::-1])
    w[n, n] = g[0, n, n]
    return w


@dataclass
class OUEnsemble:
    """Mode states of ``R`` independent replicas, ``modes.shape == (R, 2n+1, 2n+1)``.

    Single-owner mutable state: :func:`evolve` advances it in place.
    """

    n: int
    t: float
    modes: np.ndarray = field(repr=False)
    rng_seed: int
    first_replica: int = 0
    rngs: list = field(default_factory=list, repr=False)

    @property
    def mu(self) -> np.ndarray:
        return mode_rates(self.n)

    @property
    def replicas(self) -> int:
        return self.modes.shape[0]

    def field(self, i: int = 0) -> SpectralField:
        return SpectralField(self.n, self.modes[i], hermitian=True)

    def mode(self, m) -> np.ndarray:
        """``a_m`` across replicas."""
        return self.modes[:, m[0] + self.n, m[1] + self.n]

    def projected(self, radius: int) -> np.ndarray:
        """Mode array of ``Pi_radius Z_n`` (same realization)."""
        r = min(radius, self.n)
        n = self.n
        return self.modes[:, n - r : n + r + 1, n - r : n + r + 1] * ball_mask(r)


def stationary_sample(n: int, seed: int, replicas: int = 1, first_replica: int = 0) -> OUEnsemble:
    """Draw replicas ``first_replica .. first_replica + replicas - 1`` from the stationary law."""
    if n < 0:
        raise ValueError("truncation must be nonnegative")
    sd = np.sqrt(1.0 / (2.0 * mode_rates(n))) * ball_mask(n)
    rngs = [replica_rng(seed, first_replica + i) for i in range(replicas)]
    modes = np.stack([hermitian_normal(g, n) * sd for g in rngs]) if replicas else np.zeros((0, 2 * n + 1, 2 * n + 1), complex)
    return OUEnsemble(n=n, t=0.0, modes=modes, rng_seed=seed, first_replica=first_replica, rngs=rngs)


def evolve(state: OUEnsemble, dt: float) -> OUEnsemble:
    """Exact OU transition over ``dt > 0``; advances ``state`` in place and returns it.

    ``a_m <- exp(-mu_m dt) a_m + eta_m`` with ``E|eta_m|^2 = (1 - exp(-2 mu_m dt)) / (2 mu_m)``.
    """
    if not dt > 0:
        raise ValueError(f"time step must be positive, got {dt}")
    mu = state.mu
    decay = np.exp(-mu * dt)
    sd = np.sqrt(-np.expm1(-2.0 * mu * dt) / (2.0 * mu)) * ball_mask(state.n)
    noise = np.stack([hermitian_normal(g, state.n) for g in state.rngs])
    state.modes = decay * state.modes + sd * noise
    state.t += dt
    return state


@dataclass
class WickFamily:
    """Grid members ``k -> Z_n^{:k:}`` for ``k = 0..kmax``; members may carry a replica axis."""

    kmax: int
    n: int
    R: float
    members: list = field(repr=False)

    def __getitem__(self, k: int) -> GridField:
        return self.members[k]

    @property
    def P(self) -> int:
        return self.members[0].P


def min_wick_resolution(n: int, kmax: int) -> int:
    return 2 * kmax * n + 1


def wick_powers_from_modes(modes: np.ndarray, kmax: int, P: int, R: float | None = None) -> WickFamily:
    n = (modes.shape[-1] - 1) // 2
    if P <= 2 * kmax * n:
        raise ResolutionError(f"resolution P={P} must exceed 2*kmax*n={2 * kmax * n}")
    if R is None:
        R = variance_R(n)
    z = synthesize_array(modes, P).real
    members = [GridField(v) for v in hermite_table(kmax, z, R)]
    return WickFamily(kmax=kmax, n=n, R=R, members=members)


def wick_powers(state: OUEnsemble, kmax: int, P: int) -> WickFamily:
    """``Z_n^{:k:} = H_k(Z_n, R_n)`` evaluated pointwise on a ``P x P`` grid."""
    return wick_powers_from_modes(state.modes, kmax, P, variance_R(state.n))


def wick_mode_coefficients(family: WickFamily, k: int, radius: int) -> np.ndarray:
    """``<Z_n^{:k:}, e_p>`` for ``|p| <= radius`` (exact when ``P > 2 max(k n, radius)``)."""
    return analyze_array(family[k].values, radius)


def wick_mode_covariance(n: int, k: int, dt: float, p) -> float:
    """``E[<Z_n^{:k:}(t), e_p> conj(<Z_n^{:k:}(t+dt), e_p>)] = k! (K_n(dt))^{*k}(p)``."""
    if k < 1:
        raise ValueError("order must be at least 1")
    return factorial(k) * heat_star_power(dt, n, k)(p)


def simulate(n: int, kmax: int, replicas: int, seed: int, dt: float, steps: int, track_radius: int = 1, first_replica: int = 0):
    """Yield ``(replica, t, k, p1, p2, re, im)`` for ``<Z_n^{:k:}(t), e_p>``, ``|p| <= track_radius``.

    Replicas start from the stationary law and advance by exact transitions.
    """
    state = stationary_sample(n, seed, replicas, first_replica)
    P = max(min_wick_resolution(n, kmax), 2 * track_radius + 1)
    r = np.arange(-track_radius, track_radius + 1)
    tracked = [(int(a), int(b)) for a in r for b in r if a * a + b * b <= track_radius**2]
    rows = []
    for step in range(steps + 1):
        if step:
            evolve(state, dt)
        fam = wick_powers(state, kmax, P)
        for k in range(1, kmax + 1):
            coef = wick_mode_coefficients(fam, k, track_radius)
            for i in range(state.replicas):
                for p1, p2 in tracked:
                    a = coef[i, p1 + track_radius, p2 + track_radius]
                    rows.append((first_replica + i, state.t, k, p1, p2, float(a.real), float(a.imag)))
    rows.sort(key=lambda row: (row[0], row[1], row[2], row[3], row[4]))
    return rows

"""The eleven acceptance criteria, each at its stated tolerance.

Every criterion prints one PASS/FAIL line (collected in the pytest terminal
summary, or printed directly when this file is run as a script).
"""
import math
import os
import subprocess
import sys
import tempfile
import time

import numpy as np
import pytest

from oracles import n1_wick_mode_moment

CRITERIA = {}


def criterion(num):
    def deco(fn):
        CRITERIA[num] = fn
        return fn

    return deco


def _stderr(x, axis=0):
    return np.std(x, axis=axis, ddof=1) / math.sqrt(x.shape[axis])


@criterion(1)
def hermite_identities():
    from wicklab.identities import hermite_identity_report

    rep = hermite_identity_report(kmax=10, points=61, c_max=4.0)
    worst = max(rep.values())
    return worst <= 1e-10, f"worst relative residual {worst:.2e} (tol 1e-10) over {', '.join(rep)}"


@criterion(2)
def moment_identities():
    from wicklab.support import cos_moment, double_factorial, log_moment

    log_err = max(abs(log_moment(k, m) - double_factorial(2 * k)) for k in range(1, 6) for m in ("quad", "laguerre"))
    cos_err = max(abs(cos_moment(k, m) - double_factorial(2 * k - 1) / double_factorial(2 * k)) for k in range(1, 6) for m in ("quad", "trapezoid"))
    ok = log_err <= 1e-6 and cos_err <= 1e-10
    return ok, f"log-moment error {log_err:.2e} (tol 1e-6), cosine-moment error {cos_err:.2e} (tol 1e-10), k<=5"


@criterion(3)
def moment_matching():
    from wicklab.fourier import fine_resolution
    from wicklab.support import hermite_moments, match_moments

    prof = match_moments(2, a0=0.05, tol=1e-8)
    check = hermite_moments(prof.field, 4, P=4 * fine_resolution(4 * prof.radius))
    worst = max(abs(v) for v in check.values())
    return worst <= 1e-8, f"max_k |int H_k(f)| = {worst:.2e} at 4x resolution (tol 1e-8), {prof.iterations} Newton steps"


@criterion(4)
def stationary_law():
    from wicklab.fourier import ball_mask, mode_rates
    from wicklab.she import stationary_sample, variance_R

    n = 4
    st = stationary_sample(n, seed=2024, replicas=10_000)
    mu = mode_rates(n)
    # one representative per pair {m, -m}
    worst = 0.0
    for i, j in zip(*np.nonzero(ball_mask(n))):
        m = (i - n, j - n)
        if m < (0, 0) and m != (0, 0):
            continue
        x = np.abs(st.modes[:, i, j]) ** 2
        worst = max(worst, abs(x.mean() - 1 / (2 * mu[i, j])) / _stderr(x))
    R1 = variance_R(1)
    ok_mc = worst <= 3
    ok_r = abs(R1 - 0.549414) <= 1e-6
    return ok_mc and ok_r, (
        f"worst mode deviation {worst:.2f} sigma (tol 3); variance_R(1) = {R1:.10f} vs stated 0.549414 +- 1e-6 "
        f"(exact lattice sum 1/2 + 2/(1+4 pi^2) = {0.5 + 2 / (1 + 4 * math.pi**2):.10f})"
    )


@criterion(5)
def wick_covariance():
    from wicklab.fourier import fine_resolution
    from wicklab.she import covariance_C, stationary_sample, wick_mode_coefficients, wick_mode_covariance, wick_powers

    pin = max(abs(wick_mode_covariance(1, k, 0.0, p) - n1_wick_mode_moment(k, k, p).real) / wick_mode_covariance(1, k, 0.0, (0, 0))
              for k in (1, 2, 3) for p in [(0, 0), (1, 0), (1, 1), (2, 0), (2, 1), (3, 0)])
    if pin > 1e-12:
        return False, f"k! factor not confirmed by the Isserlis oracle (relative gap {pin:.2e})"
    worst_pt, worst_sp = 0.0, 0.0
    for n in (2, 4):
        P = fine_resolution(3 * n)
        st = stationary_sample(n, seed=77 + n, replicas=10_000)
        fam = wick_powers(st, 3, P)
        shifts = [(0, 0), (1, 0), (2, 3), (P // 2, P // 3)]
        for k in (1, 2, 3):
            for l in (1, 2, 3):
                for d in shifts:
                    prod = (fam[k].values * np.roll(fam[l].values, (-d[0], -d[1]), axis=(-2, -1))).mean(axis=(-2, -1))
                    target = math.factorial(k) * covariance_C(n, [d[0] / P, d[1] / P]) ** k if k == l else 0.0
                    worst_pt = max(worst_pt, abs(prod.mean() - target) / _stderr(prod))
        coef = {k: wick_mode_coefficients(fam, k, 2) for k in (1, 2, 3)}
        for k in (1, 2, 3):
            for l in (1, 2, 3):
                for p1 in range(-2, 3):
                    for p2 in range(-2, 3):
                        if p1 * p1 + p2 * p2 > 4:
                            continue
                        x = (coef[k][:, p1 + 2, p2 + 2] * np.conj(coef[l][:, p1 + 2, p2 + 2])).real
                        target = wick_mode_covariance(n, k, 0.0, (p1, p2)) if k == l else 0.0
                        worst_sp = max(worst_sp, abs(x.mean() - target) / _stderr(x))
    ok = worst_pt <= 4 and worst_sp <= 4
    return ok, f"Isserlis pin {pin:.1e}; pointwise {worst_pt:.2f} sigma, spectral {worst_sp:.2f} sigma (tol 4), n in {{2,4}}, k,l<=3"


@criterion(6)
def besov_machinery():
    from wicklab.besov import DyadicPartition, bony_decomposition, holder_norm
    from wicklab.fourier import SpectralField, ball_mask, lattice_norm2, multiply, scale_lambda

    pu = 0.0
    for kmax in range(0, 8):
        part = DyadicPartition(kmax)
        n = math.ceil(part.coverage)
        inside = np.sqrt(lattice_norm2(n)) < part.coverage
        total = sum(part.multiplier(k, n) for k in part.indices)
        pu = max(pu, float(np.abs(total[inside] - 1).max()))
    rng = np.random.default_rng(6)

    def rand(n, mean_zero=False):
        c = rng.standard_normal((2 * n + 1,) * 2) + 1j * rng.standard_normal((2 * n + 1,) * 2)
        c = 0.5 * (c + np.conj(c[::-1, ::-1])) * ball_mask(n)
        if mean_zero:
            c[n, n] = 0
        return SpectralField(n, c, True)

    bony = 0.0
    for _ in range(20):
        f, g = rand(int(rng.integers(1, 9))), rand(int(rng.integers(1, 9)))
        lo, res, hi = bony_decomposition(f, g)
        bony = max(bony, float(np.abs((lo + res + hi).coeffs - multiply(f, g).coeffs).max()))
    worst_ratio = 0.0
    for _ in range(10):
        f = rand(6, mean_zero=True)
        base = holder_norm(f, -0.4)
        for lam in (2, 4, 8, 16):
            worst_ratio = max(worst_ratio, holder_norm(scale_lambda(f, lam), -0.4) / (lam**-0.4 * base))
    ok = pu <= 1e-12 and bony <= 1e-12 and worst_ratio < 10
    return ok, f"partition of unity {pu:.1e}, Bony reconstruction {bony:.1e} (tol 1e-12), scaling ratio max {worst_ratio:.2f} (< 10)"


@criterion(7)
def kernel_bound():
    from wicklab.lattice import heat_kernel, hypothesis_constant, truncation_gap_constant, verify_decay_bound

    Cp = []
    for N in (16, 32):
        K = heat_kernel(0.0, N)
        Cp.append(verify_decay_bound(K, K, 0.9, 0.9, N, hypothesis_constant(K, 0.9)))
    drift = abs(Cp[1] / Cp[0] - 1)
    K1, K2 = heat_kernel(0.0, 16), heat_kernel(0.0, 48)
    Cbig = verify_decay_bound(K1, K2, 0.9, 0.9, 64, hypothesis_constant(K2, 0.9))
    gaps = [truncation_gap_constant(K1, K2, N, 0.9, 0.9) for N in (4, 8, 16, 24)]
    ok = drift <= 0.05 and max(gaps) <= Cbig
    return ok, f"C' = {Cp[0]:.5f} -> {Cp[1]:.5f} (drift {100 * drift:.2f}%, tol 5%); truncation gap constant {max(gaps):.4f} <= C' {Cbig:.4f}"


@criterion(8)
def kernel_decay():
    from wicklab.lattice import kernel_decay_table

    ns = [2, 4, 8, 16, 32]
    worst_slope, monotone = -math.inf, True
    for k in (0, 1, 2):
        for l in (1, 2):
            rows, slope = kernel_decay_table(ns, k, l, 0.3)
            gaps = [g for _, g in rows]
            monotone &= all(b < a for a, b in zip(gaps, gaps[1:]))
            worst_slope = max(worst_slope, slope)
    ok = monotone and worst_slope < 0
    return ok, f"strictly decreasing over n in {ns} for all k<=2, 1<=l<=2: {monotone}; largest fitted slope {worst_slope:.3f}"


@criterion(9)
def shifted_driver():
    from wicklab.besov import holder_norm
    from wicklab.fourier import SpectralField
    from wicklab.hermite import hermite_eval
    from wicklab.she import variance_R
    from wicklab.support import build_shift, hermite_of_field, match_moments, shifted_driver_distance, support_demo

    prof = match_moments(2)
    collapse = 0.0
    for n in (4, 8, 16):
        d = shifted_driver_distance(n, n, 0.3, 3, 0.4, seed=n, profile=prof)
        h = build_shift(n, variance_R(n) - 0.3, prof, 0.0)
        for k in (1, 2, 3):
            target = hermite_of_field(-h, k, variance_R(n)) - SpectralField.from_modes({(0, 0): hermite_eval(k, 0.0, 0.3)})
            collapse = max(collapse, abs(d[k] - holder_norm(target, -0.4)))
    rows = support_demo([4, 8, 16], 4, 0.3, 3, 0.4, 32, prof, master_seed=0)
    means = {k: [m for (n, kk, m, se) in rows if kk == k] for k in (1, 2, 3)}
    trend = all(all(b < a for a, b in zip(v, v[1:])) for v in means.values())
    table = "; ".join(f"k={k}: " + ", ".join(f"{m:.3f}" for m in v) for k, v in means.items())
    ok = trend and collapse <= 1e-8
    return ok, f"M=n collapse {collapse:.1e} (tol 1e-8); mean distances over n=4,8,16 [{table}] strictly decreasing: {trend}"


@criterion(10)
def chaos():
    from wicklab.gmc import chaos_monte_carlo, gmc_gap_to_one, gmc_second_moment_analytic

    zero = max(abs(gmc_second_moment_analytic(0, g, b) - math.exp(g * g / 2)) for g in (0.5, 1.0, 2.0) for b in (0.5, 0.9))
    worst = 0.0
    for n in (2, 4):
        for g in (0.5, 1.0):
            for b in (0.5, 0.9):
                mc = chaos_monte_carlo(n, g, b, 10_000, seed=100 + n)
                a = gmc_second_moment_analytic(n, g, b)
                worst = max(worst, abs(float(mc.norm_sq.mean) - a) / float(mc.norm_sq.stderr))
    dec = all(
        all(y < x for x, y in zip(gaps, gaps[1:]))
        for gaps in ([gmc_gap_to_one(N, 2 * N, g, b) for N in (2, 4, 8)] for g in (0.5, 1.0) for b in (0.5, 0.9))
    )
    pos = chaos_monte_carlo(4, 1.0, 0.5, 1000, seed=5)
    rate = pos.positive / pos.replicas
    ok = zero <= 1e-12 and worst <= 4 and dec and rate == 1.0
    return ok, f"n=0 error {zero:.1e}; MC vs analytic worst {worst:.2f} sigma (tol 4); gap-to-one decreasing: {dec}; positivity {100 * rate:.0f}%"


@criterion(11)
def determinism():
    from wicklab.cli import COMMANDS
    from wicklab.fourier import SpectralField

    with tempfile.TemporaryDirectory() as tmp:
        field = os.path.join(tmp, "field.json")
        with open(field, "w") as fh:
            fh.write(SpectralField.from_modes({(0, 0): 0.25, (2, 1): 0.5 - 0.25j, (-2, -1): 0.5 + 0.25j}).to_json())
        bad = []
        for cmd in COMMANDS:
            extra = ["--field", field] if cmd == "besov" else []
            outs = []
            for threads in (1, 1, 8):
                env = dict(os.environ, WICKLAB_THREADS=str(threads))
                r = subprocess.run([sys.executable, "-m", "wicklab", cmd, *extra], capture_output=True, env=env)
                outs.append((r.returncode, r.stdout))
            if outs[0][0] != 0 or len(set(outs)) != 1:
                bad.append(cmd)
    return not bad, f"{len(COMMANDS)} commands byte-identical over 2 runs and 1 vs 8 threads" if not bad else f"differing: {bad}"


def _evaluate(num):
    t = time.perf_counter()
    ok, detail = CRITERIA[num]()
    return ok, f"{detail} [{time.perf_counter() - t:.1f} s]"


@pytest.mark.parametrize("num", sorted(CRITERIA))
def test_criterion(num):
    from conftest import ACCEPTANCE_RESULTS

    ok, detail = _evaluate(num)
    ACCEPTANCE_RESULTS[num] = (ok, detail)
    print(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for num in sorted(CRITERIA):
        ok, detail = _evaluate(num)
        failed += not ok
        print(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}", flush=True)
    sys.exit(1 if failed else 0)

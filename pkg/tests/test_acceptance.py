"""Acceptance criteria, one test each, at the stated tolerances and time budgets.

Each test prints a single PASS/FAIL line; the lines are repeated in the
terminal summary of the pytest run.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from conftest import ACCEPTANCE, grid_lens_oracle
from polyzero.averages import (
    arcsine_ks,
    average_fields,
    cov_GN_empirical,
    cov_GN_exact,
    kappa,
    lattice,
    mnz_law,
    telescoping_check,
)
from polyzero.fields import coefficient_batch, sample_coefficients, walker_size
from polyzero.kacrice import g_contact_exact, one_point_exact, rho2_contact_exact, rho2_mc
from polyzero.specfun import complex_hermite, truncation_level
from polyzero.spectrogram import (
    deterministic_signal,
    predicted_zero_intensity,
    stft_levels,
    tf_to_z,
    white_noise,
    zero_intensity,
)
from polyzero.specfun import hermite_function
from polyzero.zeros import (
    intensity_estimate,
    one_point_intensity,
    pair_correlations,
    polynomial_zero_sets,
    square_window,
)


def report(num, title, ok, detail, start, budget):
    elapsed = time.perf_counter() - start
    ok = bool(ok) and elapsed < budget
    line = f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail} [{elapsed:.1f} s / {budget:.0f} s]"
    ACCEPTANCE[num] = line
    print(line)
    assert ok, line


def test_c01_exact_correlation_table():
    t0 = time.perf_counter()
    # pairs (a, b) are the levels; the library takes (n, k) with b = n + k
    expected = {(0, 1): Fraction(0), (1, 2): Fraction(9, 13), (0, 2): Fraction(79, 65),
                (1, 3): Fraction(5821, 4375), (2, 4): Fraction(9041, 6765)}
    bad = [(a, b) for (a, b), v in expected.items() if g_contact_exact(a, b - a) != v]
    bad += [(n, n + k) for n in range(51) for k in (3, 4, 5) if g_contact_exact(n, k) != 1]
    report(1, "exact correlation table", not bad, f"{len(expected)} quoted values and 153 unit values, mismatches {bad}",
           t0, 1.0)


def test_c02_asymptotics():
    t0 = time.perf_counter()
    scaled = [abs(float(g_contact_exact(n, 1)) - 1 + 5 / (4 * n * n)) * n**3 for n in (20, 40, 80)]
    ratio = max(scaled) / min(scaled)
    g2 = [g_contact_exact(n, 2) for n in range(2, 201)]
    dist = [abs(g - Fraction(4, 3)) for g in g2]
    mono = all(a > b for a, b in zip(g2, g2[1:])) and all(a > b for a, b in zip(dist, dist[1:]))
    detail = f"n^3 err = {[round(s, 3) for s in scaled]} (ratio {ratio:.2f}); g(n,2) monotone to 4/3 for n in 2..200: {mono}"
    report(2, "asymptotics", ratio <= 3 and mono, detail, t0, 1.0)


@pytest.mark.slow
def test_c03_kac_rice_bridge():
    t0 = time.perf_counter()
    worst = 0.0
    fails = []
    for n in range(4):
        for k in range(1, 5):
            exact = float(rho2_contact_exact(n, k)) / math.pi**2
            v, se = rho2_mc(n, k, 0j, 1e-3, nsamples=2_000_000, seed=100 * n + 10 * k + 1)
            if exact == 0.0:
                # vanishing limit: the tolerance is absolute
                ok = abs(v) < 1e-3
            else:
                ok = abs(v - exact) < 3 * se
                worst = max(worst, abs(v - exact) / se)
            if not ok:
                fails.append(("contact", n, k, v, exact, se))
            prod = one_point_intensity(n) * one_point_intensity(n + k)
            v, se = rho2_mc(n, k, 0j, 8.0, nsamples=2_000_000, seed=100 * n + 10 * k + 2)
            worst = max(worst, abs(v - prod) / se)
            if abs(v - prod) >= 3 * se:
                fails.append(("long", n, k, v, prod, se))
    report(3, "Kac-Rice MC bridge", not fails, f"32 points, max |dev|/stderr = {worst:.2f}, failures {fails}", t0, 300)


@pytest.mark.slow
def test_c04_intensities():
    t0 = time.perf_counter()
    parts = []
    ok = True
    for n in range(3):
        est = intensity_estimate(n, 200, square_window(6), seed=400 + n)
        rel = est["intensity"] / one_point_intensity(n) - 1
        ok &= abs(rel) < 0.05
        parts.append(f"n={n}: {est['intensity']:.4f} vs {one_point_intensity(n):.4f} ({rel:+.2%}, excluded {est['excluded']})")
    report(4, "one-point intensities", ok, "; ".join(parts), t0, 600)


@pytest.mark.slow
def test_c05_empirical_cross_correlations():
    t0 = time.perf_counter()
    bins = [0, 0.2, 0.4, 0.7, 1, 1.5, 2, 3, 4, 5, 6, 7]
    res = pair_correlations(0, [1, 2, 3], 500, square_window(9), bins=bins, seed=2024, erosion="bin")
    g1, g2, g3 = (res[k].g for k in (1, 2, 3))
    tail = np.array(bins[1:]) > 6
    ok = g1[0] < 0.15 and 1.05 <= g2[0] <= 1.40 and 0.85 <= g3[0] <= 1.15
    tails = [res[k].g[tail] for k in (1, 2, 3)]
    ok = ok and all(np.all((t >= 0.9) & (t <= 1.1)) for t in tails)
    detail = (f"smallest bin g01={g1[0]:.3f}, g02={g2[0]:.3f}, g03={g3[0]:.3f}; "
              f"tail {[round(float(t[0]), 3) for t in tails]}; excluded {res[1].excluded}")
    report(5, "empirical cross-correlations", ok, detail, t0, 1800)


def test_c06_degree_count():
    t0 = time.perf_counter()
    counts = []
    for seed in range(20):
        sets, _ = polynomial_zero_sets(30, seed, [0])
        counts.append(len(sets[0]) if not sets[0].flagged else -1)
    report(6, "degree count", all(c == 30 for c in counts), f"counts {sorted(set(counts))} over 20 runs", t0, 60)


@pytest.mark.slow
def test_c07_lln():
    t0 = time.perf_counter()
    N = 2000
    xs = lattice(2.0, 0.1)
    pts = xs[None, :] + 1j * xs[:, None]
    mask = np.abs(pts) <= 2.0 + 1e-12
    L = walker_size(N - 1, pts, 0.1)
    sups = []
    for seed in range(20):
        vals, _ = average_fields(N, xs, xs, coefficient_batch(L, 700 + seed, [0]), L=L)
        sups.append(float(np.abs(vals[0] - 1)[mask].max()))
    good = sum(s < 0.15 for s in sups)
    # U(0) is the identity, so S_N(0) is the mean of |zeta_n|^2 over n < N
    stat = np.array([math.sqrt(N) * (np.mean(np.abs(sample_coefficients(N - 1, s).values) ** 2) - 1)
                     for s in range(10_000)])
    ks = stats.kstest(stat, "norm").statistic
    detail = f"sup|S_N-1| < 0.15 in {good}/20 seeds (max {max(sups):.3f}); KS = {ks:.4f}"
    report(7, "law of large numbers", good >= 19 and ks < 0.02, detail, t0, 900)


def test_c08_telescoping():
    t0 = time.perf_counter()
    rng = np.random.default_rng(808)
    res = []
    for _ in range(10):
        N = int(rng.integers(1, 101))
        z = complex(*rng.uniform(-3, 3, 2))
        c = sample_coefficients(truncation_level(N, abs(z) + 1), int(rng.integers(1 << 30)))
        res.append(telescoping_check(N, z, c))
    report(8, "telescoping identity", max(res) < 1e-4, f"max relative residual {max(res):.2e}", t0, 10)


@pytest.mark.slow
def test_c09_fclt_covariance():
    t0 = time.perf_counter()
    rs = [0.25, 0.5, 1.0, 1.5, 3.0]
    exact = {r: cov_GN_exact(1600, r) for r in rs}
    lim_err = max(abs(exact[r] - kappa(r)) for r in rs)
    oracle_err = max(abs(grid_lens_oracle(r) - kappa(r)) for r in rs)
    zs = []
    for r in (0.25, 0.5, 1.0):
        out = cov_GN_empirical(400, 0.0, r, 4000, seed=900 + int(100 * r))
        zs.append((out["cov"] - cov_GN_exact(400, r)) / out["stderr"])
    ok = lim_err < 0.03 and oracle_err < 1e-4 and max(abs(z) for z in zs) < 3
    detail = (f"|cov_exact(1600)-kappa| <= {lim_err:.2e}; kappa vs grid oracle {oracle_err:.1e}; "
              f"empirical z-scores at N=400 {[round(z, 2) for z in zs]}")
    report(9, "FCLT covariance", ok, detail, t0, 1200)


def test_c10_mnz_laws():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1010)
    err = 0.0
    for _ in range(10):
        n = int(rng.integers(0, 21))
        z = 4 * math.sqrt(rng.uniform()) * np.exp(2j * math.pi * rng.uniform())
        law = mnz_law(n, z)
        err = max(err, abs(law.mean - n - abs(z) ** 2), abs(law.variance - (2 * n + 1) * abs(z) ** 2))
    ks = arcsine_ks(2000, 1000, 1.0)
    report(10, "M_{n,z} laws", err < 1e-8 and ks < 0.03, f"max moment error {err:.1e}; arcsine KS {ks:.4f}", t0, 120)


@pytest.mark.slow
def test_c11_spectrogram():
    t0 = time.perf_counter()
    grid = np.arange(-2.0, 2.01, 0.25)
    Z = tf_to_z(grid[None, :], grid[:, None])
    ident = 0.0
    for k in range(5):
        V = stft_levels(deterministic_signal(lambda t, k=k: hermite_function(k, t)), range(5), grid, grid)
        for n in range(5):
            H = np.vectorize(lambda z, k=k, n=n: complex_hermite(k, n, z))(Z)
            ident = max(ident, float(np.abs(np.abs(V[n]) - np.exp(-np.abs(Z) ** 2 / 2) * np.abs(H)).max()))
    xs = np.arange(-4.0, 4.0 + 1e-12, 0.25)
    means = {n: float(np.mean([np.mean(np.abs(stft_levels(white_noise(seed=1100 + n, realization=r), [n], xs, xs)) ** 2)
                               for r in range(100)])) for n in (0, 1)}
    inten = {n: zero_intensity(n, (-3, 3, -3, 3), 15, seed=1110 + n) for n in (0, 1)}
    rel = {n: inten[n]["intensity"] / predicted_zero_intensity(n) - 1 for n in (0, 1)}
    ok = ident < 1e-6 and all(abs(m - 1) < 0.05 for m in means.values()) and all(abs(r) < 0.10 for r in rel.values())
    detail = (f"identification error {ident:.1e}; mean spectrogram {[round(m, 4) for m in means.values()]}; "
              f"zero intensity rel. error {[f'{r:+.2%}' for r in rel.values()]}")
    report(11, "spectrogram identification", ok, detail, t0, 600)

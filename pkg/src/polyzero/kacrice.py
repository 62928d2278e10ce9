"""Two-point zero correlations between Landau levels n and n+k.

The Kac-Rice construction conditions the 6-vector

    (f_n(z), h(w), up f_n(z), down f_n(z), up h(w), down h(w)),  h = up^k f_n,

on its first two entries vanishing.  Everything here is built from the
scaled covariances E[X_a(p) conj X_b(q)], which are bounded by one; the
Gaussian weights e^{|z|^2}, e^{|w|^2} cancel between the conditional
expectation and the density at zero, so no overflow control is needed.

Exact contact values are rationals (times pi^-2) and are computed with
:class:`fractions.Fraction`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    ContactSeparation,
    DegenerateScale,
    IndefiniteCovariance,
    NearSingularU,
)
from .fields import scaled_cross_covariance, stream
from .zeros import one_point_intensity

__all__ = [
    "KacRiceAssembly",
    "assemble",
    "contact_assembly",
    "rho2_mc",
    "rho2_from_assembly",
    "rho2_contact_exact",
    "g_contact_exact",
    "one_point_exact",
    "abs_moment_pair",
    "abs_moment_coupled",
    "g_normalized",
    "g_table",
]

MIN_SEPARATION = 1e-6
COND_MAX = 1e12
EIG_TOL = 1e-8
DEFAULT_SAMPLES = 2_000_000
_CHUNK = 250_000


def _rising(a, k):
    return math.prod(range(a, a + k))


@dataclass(frozen=True)
class KacRiceAssembly:
    """Blocks of the 6x6 covariance, in X scaling (entries bounded by one).

    ``log_scale`` = (|z|^2/2, |w|^2/2) is the factor each z- or w-entry of
    the f-scaled vector carries; it cancels in rho2 and is kept for reference.
    """

    n: int
    k: int
    z: complex
    w: complex
    U_block: np.ndarray
    V_block: np.ndarray
    W_block: np.ndarray
    Lambda: np.ndarray
    det_piU: float
    log_scale: tuple


def _entries(n, k):
    """(level, point, weight) for the six entries; point 0 is z, 1 is w."""
    c = math.sqrt(_rising(n + 1, k))
    return [
        (n, 0, 1.0),
        (n + k, 1, c),
        (n + 1, 0, math.sqrt(n + 1)),
        (n - 1, 0, -math.sqrt(n)),
        (n + k + 1, 1, c * math.sqrt(n + k + 1)),
        (n + k - 1, 1, -c * math.sqrt(n + k)),
    ]


def _sigma(n, k, z, w):
    ent = _entries(n, k)
    pts = (z, w)
    S = np.zeros((6, 6), dtype=complex)
    for i, (a, p, ca) in enumerate(ent):
        for j, (b, q, cb) in enumerate(ent):
            if j < i or a < 0 or b < 0 or ca == 0 or cb == 0:
                continue
            S[i, j] = ca * cb * scaled_cross_covariance(a, b, pts[p], pts[q])
            S[j, i] = np.conj(S[i, j])
    return S


def _build(n, k, z, w, check_cond=True):
    S = _sigma(n, k, z, w)
    U, V, W = S[:2, :2], S[:2, 2:], S[2:, 2:]
    if check_cond:
        cond = np.linalg.cond(U)
        if not np.isfinite(cond) or cond > COND_MAX:
            raise NearSingularU(f"cond(U) = {cond:.3g} at |z-w| = {abs(w - z):.3g}; use the contact formulas")
    det = (U[0, 0] * U[1, 1] - U[0, 1] * U[1, 0]).real
    Uinv = np.array([[U[1, 1], -U[0, 1]], [-U[1, 0], U[0, 0]]]) / det
    L = W - V.conj().T @ Uinv @ V
    L = 0.5 * (L + L.conj().T)
    return KacRiceAssembly(
        n=n,
        k=k,
        z=complex(z),
        w=complex(w),
        U_block=U,
        V_block=V,
        W_block=W,
        Lambda=L,
        det_piU=math.pi**2 * det,
        log_scale=(abs(z) ** 2 / 2, abs(w) ** 2 / 2),
    )


def assemble(n, k, z, w):
    """Covariance blocks and Schur complement for levels (n, n+k) at (z, w)."""
    if k < 1 or n < 0:
        raise ValueError("need n >= 0 and k >= 1")
    z, w = complex(z), complex(w)
    if abs(z - w) < MIN_SEPARATION:
        raise ContactSeparation(f"|z-w| = {abs(z - w):.3g} below {MIN_SEPARATION}; use rho2_contact_exact")
    return _build(n, k, z, w)


def contact_assembly(n, k):
    """The w -> z limit of :func:`assemble` (translation invariant, so at 0)."""
    if k < 1 or n < 0:
        raise ValueError("need n >= 0 and k >= 1")
    return _build(n, k, 0j, 0j, check_cond=False)


def _sqrt_psd(L):
    vals, vecs = np.linalg.eigh(L)
    tol = EIG_TOL * max(np.trace(L).real, 0.0)
    if vals.min() < -tol:
        raise IndefiniteCovariance(f"Schur complement has eigenvalue {vals.min():.3g} below -{tol:.3g}")
    return vecs * np.sqrt(np.clip(vals, 0.0, None))[None, :]


def rho2_from_assembly(asm, nsamples=DEFAULT_SAMPLES, seed=0):
    """Monte Carlo Kac-Rice two-point intensity; returns (value, stderr)."""
    nsamples = int(nsamples)
    if nsamples < 2:
        raise ValueError("need at least two samples")
    root = _sqrt_psd(asm.Lambda)
    total = 0.0
    total_sq = 0.0
    done = 0
    chunk = 0
    while done < nsamples:
        m = min(_CHUNK, nsamples - done)
        rng = stream(seed, chunk)
        g = rng.standard_normal((m, 4, 2))
        eta = (g[..., 0] + 1j * g[..., 1]) / math.sqrt(2.0)
        xi = eta @ root.T
        a = np.abs(xi) ** 2
        val = np.abs(a[:, 0] - a[:, 1]) * np.abs(a[:, 2] - a[:, 3])
        total += val.sum()
        total_sq += (val * val).sum()
        done += m
        chunk += 1
    mean = total / done
    var = max(total_sq / done - mean * mean, 0.0) * done / (done - 1)
    return mean / asm.det_piU, math.sqrt(var / done) / asm.det_piU


def rho2_mc(n, k, z, w, nsamples=DEFAULT_SAMPLES, seed=0):
    """rho^{(2)}_{n,n+k}(z, w) by Monte Carlo; returns (value, stderr)."""
    return rho2_from_assembly(assemble(n, k, z, w), nsamples, seed)


def one_point_exact(n):
    """pi * rho_n^{(1)} as a rational: n + 1/2 + 1/(4n+2)."""
    return Fraction(n) + Fraction(1, 2) + Fraction(1, 4 * n + 2)


def rho2_contact_exact(n, k):
    """pi^2 * lim_{w->z} rho^{(2)}_{n,n+k}(z, w), exactly."""
    if k < 1 or n < 0:
        raise ValueError("need n >= 0 and k >= 1")
    n = int(n)
    if k == 1:
        return Fraction(n * (n + 2))
    if k == 2:
        q = n * n + 3 * n + 1
        brace = Fraction(n**4 * (n + 2) ** 2, (2 * n + 1) ** 2) + Fraction((n + 1) ** 2 * (n + 3) ** 4, (2 * n + 5) ** 2)
        return q + Fraction(2, 3 * q) * brace
    return one_point_exact(n) * one_point_exact(n + k)


def g_contact_exact(n, k):
    """Normalized contact correlation g_{n,n+k}(z, z) as a Fraction."""
    return rho2_contact_exact(n, k) / (one_point_exact(n) * one_point_exact(n + k))


def abs_moment_pair(a, b):
    """E|a E1 - b E2| for independent unit exponentials: (a^2+b^2)/(a+b)."""
    if a < 0 or b < 0 or a + b == 0:
        raise ValueError("need a, b >= 0 with a + b > 0")
    return (a * a + b * b) / (a + b)


def abs_moment_coupled(a, b, c, d):
    """E[|a E1 - b E2| |c E1 - d E3|] for independent unit exponentials.

    Works with Fractions as well as floats.
    """
    if b == 0 or d == 0:
        raise DegenerateScale("b and d must be nonzero; take the limit analytically")
    x = a / b
    y = c / d
    s = 1 + x + y
    return b * d * (2 * x * y - (x + y) + 2 * y * y / ((1 + x) ** 2 * s) + 2 * x * x / ((1 + y) ** 2 * s) + 1)


def g_normalized(n, k, z, w, nsamples=DEFAULT_SAMPLES, seed=0):
    """rho2_mc divided by the exact one-point intensities; (value, stderr)."""
    val, se = rho2_mc(n, k, z, w, nsamples, seed)
    norm = one_point_intensity(n) * one_point_intensity(n + k)
    return val / norm, se / norm


def g_table(nmax=10, kmax=5):
    """Rows (n, k, numerator, denominator, value) of exact contact correlations."""
    rows = []
    for n in range(nmax + 1):
        for k in range(1, kmax + 1):
            g = g_contact_exact(n, k)
            rows.append((n, k, g.numerator, g.denominator, float(g)))
    return rows

"""Level averages S_N, their fluctuation fields and the laws behind them.

S_N(z) = (1/N) sum_{n<N} |X_n(z)|^2 tends to 1; the rescaled fluctuation
G_N(xi) = sqrt(N) (S_N(z0 + sqrt(N) xi) - 1) has covariance

    (1/N) sum_{n<N} P(M_{n, sqrt(N) u} < N),   u = eta - xi,

with P(M_{n,z} = m) = |U(z)_{m,n}|^2.  Its limit is the normalized overlap
area kappa(|u|) of two unit disks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import DegenerateAtZero, TruncationInsufficient
from .fields import CoefficientVector, coefficient_batch, lattice_levels, walker_size
from .specfun import TAU_TRUNC, displacement_block, displacement_column, truncation_level

__all__ = [
    "FieldGrid",
    "MnzLaw",
    "ArcsineLaw",
    "average_field",
    "average_fields",
    "telescoping_check",
    "fluctuation_field",
    "kappa",
    "kappa_from_q",
    "q_r",
    "mnz_law",
    "cov_GN_exact",
    "cov_GN_empirical",
    "arcsine_reference",
    "arcsine_ks",
    "lattice",
]


@dataclass
class FieldGrid:
    """Values of S_N or G_N on a rectangular lattice."""

    points: np.ndarray
    values: np.ndarray
    N: int
    seed: int | None
    truncation: int
    kind: str

    def sup_deviation(self, mask=None):
        """sup |S_N - 1| (or sup |G_N|) over the grid, optionally masked."""
        base = 1.0 if self.kind == "S_N" else 0.0
        dev = np.abs(self.values - base)
        if mask is not None:
            dev = dev[mask]
        return float(dev.max())


def lattice(half, h):
    """Symmetric 1-d lattice -half..half with spacing h (both ends included)."""
    m = int(round(half / h))
    return h * np.arange(-m, m + 1)


def _rows(coeffs):
    if isinstance(coeffs, CoefficientVector):
        return coeffs.values[None, :], coeffs.seed
    return np.atleast_2d(np.asarray(coeffs)), None


def average_fields(N, xs, ys, coeff_rows, L=None):
    """S_N on the lattice xs x ys for each coefficient row; shape (B, ny, nx).

    Uses the lattice walker, so xs and ys must share one uniform spacing.
    """
    if N < 1:
        raise ValueError("N must be positive")
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    h = float(xs[1] - xs[0]) if xs.size > 1 else (float(ys[1] - ys[0]) if ys.size > 1 else 0.25)
    pts = xs[None, :] + 1j * ys[:, None]
    if L is None:
        L = walker_size(N - 1, pts, h)
    rows = np.atleast_2d(coeff_rows)
    if rows.shape[1] < L + 1:
        raise TruncationInsufficient(f"S_{N} on this grid needs {L + 1} coefficients, got {rows.shape[1]}")

    def mean_square(psi):
        return np.sum(np.abs(psi[:N]) ** 2, axis=0) / N

    vals = lattice_levels(rows, xs, ys, mean_square, L)
    return np.moveaxis(vals, -1, 0), L


def average_field(N, xs, ys, coeffs):
    """S_N for one coefficient vector as a :class:`FieldGrid`."""
    rows, seed = _rows(coeffs)
    vals, L = average_fields(N, xs, ys, rows[:1])
    pts = np.asarray(xs)[None, :] + 1j * np.asarray(ys)[:, None]
    return FieldGrid(points=pts, values=vals[0], N=int(N), seed=seed, truncation=L, kind="S_N")


def telescoping_check(N, z, coeffs, step=1e-4, return_parts=False):
    """Relative residual of d/dz S_N = X_N conj(X_{N-1}) / sqrt(N).

    The derivative is a central difference with the given step.
    """
    if not 1e-6 <= step <= 1e-3:
        raise ValueError("step must lie in [1e-6, 1e-3]")
    if N < 1:
        raise ValueError("N must be positive")
    rows, _ = _rows(coeffs)
    zeta = rows[0]
    K = zeta.size - 1
    z = complex(z)
    need = truncation_level(N, abs(z) + step)
    if K < need:
        raise TruncationInsufficient(f"need K >= {need} for level {N} at |z| = {abs(z):.3g}")
    pts = z + np.array([0, step, -step, 1j * step, -1j * step])
    X = np.einsum("k,pkn->pn", zeta, displacement_block(pts, K, N))
    S = np.sum(np.abs(X[:, :N]) ** 2, axis=1) / N
    dz = ((S[1] - S[2]) - 1j * (S[3] - S[4])) / (4 * step)
    rhs = X[0, N] * np.conj(X[0, N - 1]) / math.sqrt(N)
    res = abs(dz - rhs) / abs(rhs)
    if return_parts:
        grad2 = 4 * abs(dz) ** 2
        return {
            "residual": res,
            "finite_difference": dz,
            "identity": rhs,
            "grad_sq": grad2,
            "grad_sq_identity": 4.0 / N * abs(X[0, N]) ** 2 * abs(X[0, N - 1]) ** 2,
        }
    return res


def fluctuation_field(N, z0, xi_x, xi_y, coeffs):
    """G_N(xi) = sqrt(N) (S_N(z0 + sqrt(N) xi) - 1) on the lattice xi_x x xi_y."""
    rows, seed = _rows(coeffs)
    s = math.sqrt(N)
    xs = complex(z0).real + s * np.asarray(xi_x, dtype=float)
    ys = complex(z0).imag + s * np.asarray(xi_y, dtype=float)
    vals, L = average_fields(N, xs, ys, rows[:1])
    pts = np.asarray(xi_x)[None, :] + 1j * np.asarray(xi_y)[:, None]
    return FieldGrid(points=pts, values=s * (vals[0] - 1.0), N=int(N), seed=seed, truncation=L, kind="G_N")


def kappa(r):
    """Normalized overlap area of two unit disks at centre distance r."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("r must be nonnegative")
    rc = np.minimum(r, 2.0)
    out = (2 / np.pi) * np.arccos(rc / 2) - (rc / np.pi) * np.sqrt(1 - rc**2 / 4)
    out = np.where(r >= 2.0, 0.0, out)
    return float(out) if out.ndim == 0 else out


def q_r(r, t):
    """P(A_{t,r} < 1 - t - r^2): limit of P(M_{n, sqrt(N) r} < N) at n/N = t."""
    r = float(r)
    t = float(t)
    if r + math.sqrt(t) <= 1.0:
        return 1.0
    if r >= 1.0 + math.sqrt(t):
        return 0.0
    arg = (t + r * r - 1) / (2 * r * math.sqrt(t))
    return math.acos(min(1.0, max(-1.0, arg))) / math.pi


def kappa_from_q(r):
    """kappa(r) as the integral of q_r(t) over t in [0, 1]."""
    r = float(r)
    brk = sorted({p for p in ((1 - r) ** 2 if r <= 1 else None, (r - 1) ** 2) if p is not None and 0 < p < 1})
    val, _ = integrate.quad(lambda t: q_r(r, t), 0.0, 1.0, points=brk or None, epsabs=1e-13, epsrel=1e-12, limit=200)
    return val


@dataclass
class MnzLaw:
    """Law of M_{n,z}: P(M = m) = |U(z)_{m,n}|^2 for m = 0..M_max."""

    n: int
    z: complex
    pmf: np.ndarray = field(repr=False)
    tail: float

    @property
    def support(self):
        return np.arange(self.pmf.size)

    @property
    def mean(self):
        return float(self.pmf @ self.support)

    @property
    def variance(self):
        m = self.support
        mu = self.pmf @ m
        return float(self.pmf @ (m - mu) ** 2)

    def cdf(self):
        return np.cumsum(self.pmf)

    def prob_below(self, N):
        """P(M < N)."""
        return float(self.pmf[: max(0, min(int(N), self.pmf.size))].sum())


def mnz_law(n, z, m_max=None):
    """Law of M_{n,z}, truncated at mean + 10 sd + 50 unless ``m_max`` is given."""
    n = int(n)
    if n < 0:
        raise ValueError("n must be nonnegative")
    z = complex(z)
    x = abs(z) ** 2
    if m_max is None:
        m_max = int(math.ceil(n + x + 10 * math.sqrt((2 * n + 1) * x) + 50))
    col = displacement_column(z, m_max, n)
    pmf = np.abs(col) ** 2
    tail = max(0.0, 1.0 - float(pmf.sum()))
    if tail > TAU_TRUNC:
        raise TruncationInsufficient(f"M_{{{n},z}} law misses mass {tail:.3g} at m_max={m_max}")
    return MnzLaw(n=n, z=z, pmf=pmf, tail=tail)


def cov_GN_exact(N, r):
    """(1/N) sum_{n<N} P(M_{n, sqrt(N) r} < N), the exact covariance of G_N.

    All N laws share the displacement matrix at sqrt(N) r, so one N x N
    block is formed and its squared moduli summed.
    """
    N = int(N)
    if N < 1 or r < 0:
        raise ValueError("need N >= 1 and r >= 0")
    if r == 0:
        return 1.0
    blk = displacement_block(math.sqrt(N) * r, N - 1, N - 1)
    return float(np.sum(np.abs(blk) ** 2) / N)


def cov_GN_empirical(N, xi, eta, realizations, seed, z0=0j, batch=500, return_samples=False):
    """Sample covariance of (G_N(xi), G_N(eta)) over seeded realizations."""
    N = int(N)
    s = math.sqrt(N)
    pts = np.array([complex(z0) + s * complex(xi), complex(z0) + s * complex(eta)])
    K = truncation_level(N - 1, float(np.abs(pts).max()))
    blk = displacement_block(pts, K, N - 1)
    G = np.empty((realizations, 2))
    for start in range(0, realizations, batch):
        idx = range(start, min(realizations, start + batch))
        Z = coefficient_batch(K, seed, idx)
        for p in range(2):
            X = Z @ blk[p]
            G[start : start + len(idx), p] = s * (np.mean(np.abs(X) ** 2, axis=1) - 1.0)
    c = G - G.mean(axis=0)
    prod = c[:, 0] * c[:, 1]
    cov = float(prod.sum() / (realizations - 1))
    se = float(prod.std(ddof=1) / math.sqrt(realizations))
    out = {"cov": cov, "stderr": se, "realizations": int(realizations), "truncation": K}
    if return_samples:
        out["samples"] = G
    return out


class ArcsineLaw:
    """Arcsine law A_{t,r} on (-2 sqrt(t) r, 2 sqrt(t) r)."""

    def __init__(self, t, r):
        if not 0 < t <= 1:
            raise ValueError("t must lie in (0, 1]")
        if r < 0:
            raise ValueError("r must be nonnegative")
        self.t = float(t)
        self.r = float(r)
        self.half_width = 2 * math.sqrt(self.t) * self.r

    def pdf(self, y):
        if self.r == 0:
            raise DegenerateAtZero("A_{t,0} is a point mass at 0 and has no density")
        y = np.asarray(y, dtype=float)
        inside = np.abs(y) < self.half_width
        with np.errstate(invalid="ignore", divide="ignore"):
            d = 1.0 / (np.pi * np.sqrt(self.half_width**2 - y**2))
        return np.where(inside, d, 0.0)

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        if self.r == 0:
            return (y >= 0).astype(float)
        c = np.clip(y / self.half_width, -1.0, 1.0)
        return 0.5 + np.arcsin(c) / np.pi

    @property
    def variance(self):
        return 2 * self.t * self.r**2


def arcsine_reference(t, r):
    return ArcsineLaw(t, r)


def arcsine_ks(N, n, xi):
    """KS distance between the law of (M_{n, sqrt(N) xi} - n - N|xi|^2)/N and A_{n/N, |xi|}."""
    law = mnz_law(n, math.sqrt(N) * complex(xi))
    y = (law.support - n - N * abs(complex(xi)) ** 2) / N
    ref = ArcsineLaw(n / N, abs(complex(xi)))
    F = np.cumsum(law.pmf)
    G = ref.cdf(y)
    F_left = np.concatenate([[0.0], F[:-1]])
    return float(max(np.max(np.abs(F - G)), np.max(np.abs(F_left - G))))

"""Sampling the coupled Gaussian fields X_n(z) = exp(-|z|^2/2) f_n(z).

All levels are driven by one coefficient vector:

    X_n(z) = sum_k zeta_k U(z)_{k,n}.

Three evaluation paths are provided.

* direct: form the block U(z)_{k,n} for every point.  Used when the
  truncation K is small, and always for truncated polynomials.
* tiled: the plane is cut into square tiles of side TILE.  Translation
  covariance U(c+w) = lambda(c,w) U(c) U(w) turns the coefficients into
  local ones, zeta~ = zeta U(c), so a point near the tile centre c only
  needs a short vector of length about 100 whatever K is.
* walker: the vector of all levels psi_j(z) = X_j(z) obeys
  psi(z+h) = lambda(z,h) U(h)^T psi(z) with U(h) narrow-banded for small h.
  This evaluates thousands of levels along a lattice path.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import gammaln

from .errors import HermiteOverflow, TruncationInsufficient
from .specfun import (
    TAU_TRUNC,
    _diagonal_table,
    complex_hermite_log,
    displacement_block,
    laguerre,
    truncation_level,
)

__all__ = [
    "CoefficientVector",
    "FieldBasis",
    "FieldSample",
    "LevelWalker",
    "coefficient_batch",
    "covariance_kernel",
    "cross_covariance",
    "displacement_band",
    "eval_X",
    "sample_coefficients",
    "scaled_cross_covariance",
    "stream",
    "translation_phase",
    "truncation_radius",
]

TILE = 2.0
DIRECT_K = 160
_CHUNK = 4096


def stream(seed, realization=0):
    """Generator for realization r of an experiment seeded with ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(realization),))
    return np.random.Generator(np.random.PCG64(ss))


def _complex_normals(rng, size):
    # pairs are drawn row-wise so that a longer vector extends a shorter one
    g = rng.standard_normal((size, 2))
    return (g[:, 0] + 1j * g[:, 1]) / math.sqrt(2.0)


@dataclass(frozen=True)
class CoefficientVector:
    """One realization of i.i.d. standard complex Gaussians zeta_0..zeta_K."""

    seed: int
    values: np.ndarray
    K: int
    realization: int = 0


def sample_coefficients(K, seed, realization=0):
    """Draw K+1 coefficients for realization ``realization`` of ``seed``.

    Coefficients are nested: the first K+1 values do not depend on K.
    """
    if K < 0:
        raise ValueError("K must be nonnegative")
    vals = _complex_normals(stream(seed, realization), K + 1)
    vals.setflags(write=False)
    return CoefficientVector(int(seed), vals, int(K), int(realization))


def coefficient_batch(K, seed, realizations):
    """Matrix whose rows are the coefficient vectors of the given realizations."""
    return np.stack([_complex_normals(stream(seed, r), K + 1) for r in realizations])


def truncation_radius(K, N):
    """Largest radius R with truncation_level(N, R) <= K (0 if none)."""
    lo, hi = 0.0, math.sqrt(max(K, 1)) + 1.0
    if truncation_level(N, 0.0) > K:
        return 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if truncation_level(N, mid) <= K:
            lo = mid
        else:
            hi = mid
    return lo


def translation_phase(z0, z):
    """lambda(z0, z) = exp(-i Im(z0 conj z))."""
    return np.exp(-1j * np.imag(np.asarray(z0) * np.conj(np.asarray(z))))


class FieldBasis:
    """Realization-independent data for tiled evaluation at truncation K.

    Holds the local truncation and a small cache of tile matrices U(c).
    """

    def __init__(self, K, max_level, cache_size=32):
        self.K = int(K)
        self.max_level = int(max_level)
        # points are at most TILE/sqrt(2) from their tile centre
        self.local_K = truncation_level(self.max_level, TILE / math.sqrt(2.0) + 0.05)
        self._tiles = OrderedDict()
        self._cache_size = cache_size
        self._grids = {}

    @staticmethod
    def tile_index(z):
        z = np.asarray(z, dtype=complex)
        return np.rint(z.real / TILE).astype(np.int64), np.rint(z.imag / TILE).astype(np.int64)

    @staticmethod
    def centre(i, j):
        return TILE * complex(i, j)

    def tile_matrix(self, i, j):
        key = (int(i), int(j))
        if key in self._tiles:
            self._tiles.move_to_end(key)
            return self._tiles[key]
        mat = displacement_block(self.centre(*key), self.K, self.local_K)
        self._tiles[key] = mat
        if len(self._tiles) > self._cache_size:
            self._tiles.popitem(last=False)
        return mat

    def local_factors(self, z, key=None):
        """Tile grouping, coherent powers w^k/sqrt(k!) and phases for points z.

        Results for a fixed point set can be cached under ``key``.
        """
        if key is not None and key in self._grids:
            return self._grids[key]
        zf = np.asarray(z, dtype=complex).ravel()
        i, j = self.tile_index(zf)
        c = TILE * (i + 1j * j)
        w = zf - c
        k = np.arange(1, self.local_K + 1)
        T = np.empty((zf.size, self.local_K + 1), dtype=complex)
        T[:, 0] = 1.0
        T[:, 1:] = w[:, None] / np.sqrt(k)[None, :]
        np.cumprod(T, axis=1, out=T)
        flat = (i - i.min()) * (int(j.max() - j.min()) + 1) + (j - j.min()) if zf.size else i
        order = np.argsort(flat, kind="stable")
        sflat = flat[order]
        cuts = np.flatnonzero(np.diff(sflat)) + 1
        groups = [
            ((int(i[g[0]]), int(j[g[0]])), g) for g in np.split(order, cuts)
        ] if zf.size else []
        out = (groups, T, w, translation_phase(c, w) * np.exp(-np.abs(w) ** 2 / 2))
        if key is not None:
            self._grids[key] = out
            if len(self._grids) > 8:
                self._grids.pop(next(iter(self._grids)))
        return out

    def attach_tiles(self, samples, tiles):
        """Precompute local coefficients of every sample for the given tiles.

        One tile matrix is formed per tile and shared by the whole batch.
        """
        Z = np.stack([s.coeffs.values[: self.K + 1] for s in samples])
        for key in tiles:
            mat = displacement_block(self.centre(*key), self.K, self.local_K)
            loc = Z @ mat
            for s, row in zip(samples, loc):
                s._tile_coeffs[(int(key[0]), int(key[1]))] = row


class FieldSample:
    """The fields X_0..X_{max_level} of one coefficient vector.

    With ``polynomial=True`` the truncated sum is taken as the model itself
    (degree-K polynomial for level 0) and no radius check is made.  Outside
    |z|^2 = K such a field decays like exp(-|z|^2/2) |z|^K, so values there
    are multiplied by the C^1 radial weight exp(polynomial_weight(z, K)),
    which is 1 for |z|^2 <= K.  Zeros and Newton steps are unaffected.
    """

    def __init__(self, coeffs, max_level, basis=None, polynomial=False, window=None):
        self.coeffs = coeffs
        self.K = coeffs.K
        self.max_level = int(max_level)
        self.polynomial = bool(polynomial)
        self.window = window
        if self.K < self.max_level:
            raise ValueError("truncation below the highest level")
        self.radius = math.inf if polynomial else truncation_radius(self.K, self.max_level)
        self.tiled = (not polynomial) and self.K > DIRECT_K
        if self.tiled and basis is None:
            basis = FieldBasis(self.K, self.max_level)
        self.basis = basis
        self._tile_coeffs = {}
        self._deriv = {}

    def _check_radius(self, z):
        if self.polynomial or np.size(z) == 0:
            return
        rmax = float(np.max(np.abs(z)))
        if rmax > self.radius + 1e-12:
            need = truncation_level(self.max_level, rmax)
            raise TruncationInsufficient(
                f"|z| = {rmax:.4g} exceeds the radius {self.radius:.4g} covered by K={self.K}; "
                f"need K >= {need}"
            )

    def _local(self, key):
        if key not in self._tile_coeffs:
            mat = self.basis.tile_matrix(*key)
            self._tile_coeffs[key] = self.coeffs.values[: self.K + 1] @ mat
        return self._tile_coeffs[key]

    def _derivative_coeffs(self, key, top):
        """Matrix D[k, j] = zt_{k+j} sqrt((k+j)!/k!) for the tile ``key``."""
        dk = (key, top)
        if dk not in self._deriv:
            zt = self._local(key)
            L = zt.size
            D = np.zeros((L, top + 1), dtype=complex)
            k = np.arange(L, dtype=float)
            for j in range(top + 1):
                D[: L - j, j] = zt[j:] * np.exp(0.5 * (gammaln(k[j:] + 1) - gammaln(k[: L - j] + 1)))
            self._deriv[dk] = D
        return self._deriv[dk]

    def values(self, z, levels=None, cache_key=None):
        """X_n(z) for n in ``levels``; shape z.shape + (len(levels),)."""
        if levels is None:
            levels = list(range(self.max_level + 1))
        levels = [int(n) for n in np.atleast_1d(levels)]
        if max(levels) > self.max_level or min(levels) < 0:
            raise ValueError(f"levels must lie in 0..{self.max_level}")
        z = np.asarray(z, dtype=complex)
        self._check_radius(z)
        zf = z.ravel()
        out = np.empty((zf.size, len(levels)), dtype=complex)
        if not self.tiled:
            zeta = self.coeffs.values
            top = max(levels)
            for s in range(0, zf.size, _CHUNK):
                part = zf[s : s + _CHUNK]
                shift = polynomial_weight(part, self.K) if self.polynomial else None
                blk = displacement_block(part, self.K, top, log_shift=shift, columns=levels)
                out[s : s + _CHUNK] = np.einsum("k,pkl->pl", zeta, blk)
        else:
            # X_n(c + w) = lam e^{-|w|^2/2} / sqrt(n!) sum_j C(n,j) (-conj w)^{n-j} F_j(w)
            # with F_j the j-th derivative of sum_k zt_k w^k / sqrt(k!), zt the
            # local coefficients; stable because |w| stays below TILE
            top = max(levels)
            groups, T, w, lam = self.basis.local_factors(zf, key=cache_key)
            F = np.empty((zf.size, top + 1), dtype=complex)
            for key, idx in groups:
                F[idx] = T[idx] @ self._derivative_coeffs(key, top)
            mw = -np.conj(w)
            for col, n in enumerate(levels):
                acc = np.zeros(zf.size, dtype=complex)
                for j in range(n + 1):
                    acc += math.comb(n, j) * mw ** (n - j) * F[:, j]
                out[:, col] = acc * (lam / math.sqrt(math.factorial(n)))
        return out.reshape(z.shape + (len(levels),))

    def value(self, n, z):
        return self.values(z, [n])[..., 0]


def polynomial_weight(z, K):
    """Log of the radial weight used for truncated polynomials.

    Zero for x = |z|^2 <= K, else (x-K)/2 - (K/2) log(x/K); continuous with
    its first derivative at x = K.
    """
    x = np.abs(np.asarray(z)) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(x > K, 0.5 * (x - K) - 0.5 * K * np.log(np.where(x > K, x, 1.0) / max(K, 1)), 0.0)
    return w


def eval_X(n, z, coeffs, polynomial=False):
    """X_n(z) for a coefficient vector (direct path)."""
    sample = FieldSample(coeffs, n, polynomial=polynomial)
    sample.tiled = False
    v = sample.value(n, z)
    return v if np.ndim(v) else complex(v)


def covariance_kernel(n, z, w, log=False):
    """K_n(z, w) = L_n(|z-w|^2) exp(z conj w).

    With ``log=True`` returns (L_n(|z-w|^2), z conj w) so that the value is
    first * exp(second); this never overflows.
    """
    z = complex(z)
    w = complex(w)
    lag = laguerre(n, 0, abs(z - w) ** 2)
    expo = z * w.conjugate()
    if log:
        return lag, expo
    if expo.real > 709:
        raise HermiteOverflow("exp(z conj w) overflows; use log=True")
    return lag * np.exp(expo)


def cross_covariance(n, l, z, w, log=False):
    """s_{n,l}(z,w) = E[f_n(z) conj f_l(w)] = (-1)^{n+l} H_{l,n}(w-z) exp(z conj w).

    With ``log=True`` returns (log-modulus, phase).
    """
    z = complex(z)
    w = complex(w)
    logmod, phase = complex_hermite_log(l, n, w - z)
    expo = z * w.conjugate()
    logmod = logmod + expo.real
    phase = phase + expo.imag + math.pi * ((n + l) % 2)
    if log:
        return logmod, math.remainder(phase, 2 * math.pi)
    if logmod == -math.inf:
        return 0j
    if logmod > 709:
        raise HermiteOverflow("cross covariance overflows; use log=True")
    return complex(math.exp(logmod) * complex(math.cos(phase), math.sin(phase)))


def scaled_cross_covariance(n, l, z, w):
    """E[X_n(z) conj X_l(w)], bounded by 1 in modulus.

    Equals (-1)^{n+l} U(w-z)_{l,n} exp(i Im(z conj w)).
    """
    z = complex(z)
    w = complex(w)
    d = w - z
    top = max(n, l)
    u = displacement_block(d, top, top)[l, n]
    return complex((-1) ** (n + l) * u * np.exp(1j * (z * w.conjugate()).imag))


def displacement_band(h, L, band=None):
    """Sparse (L+1) x (L+1) matrix of U(h) entries with |m-n| <= band.

    For small |h| the discarded entries are below TAU_TRUNC in column norm.
    """
    h = complex(h)
    if band is None:
        band = int(math.ceil(10.0 * math.sqrt(2 * L + 1) * abs(h) + abs(h) ** 2 + 20))
    band = min(band, L)
    u = _diagonal_table(abs(h) ** 2, band, L)
    theta = math.atan2(h.imag, h.real)
    diags, offsets = [], []
    for a in range(0, band + 1):
        # lower: U_{n+a, n} = e^{i a theta} u_a(n), n = 0..L-a
        diags.append(np.exp(1j * a * theta) * u[a, : L + 1 - a])
        offsets.append(-a)
        if a > 0:
            # upper: U_{m, m+a} = (-1)^a e^{-i a theta} u_a(m)
            diags.append((-1) ** a * np.exp(-1j * a * theta) * u[a, : L + 1 - a])
            offsets.append(a)
    return sp.diags(diags, offsets, shape=(L + 1, L + 1), format="csr")


class LevelWalker:
    """Propagate the vector (X_0(z), ..., X_L(z)) along lattice steps.

    ``coeffs`` is a (B, >=L+1) array of coefficient rows, one per realization.
    The walker starts at z = 0, where X_j(0) = zeta_j.  The top of the
    vector degrades by truncation, so L must satisfy the truncation rule for
    the largest level needed and the largest distance travelled.
    """

    def __init__(self, coeffs, L):
        coeffs = np.atleast_2d(np.asarray(coeffs))
        self.L = int(L)
        if coeffs.shape[1] < self.L + 1:
            raise TruncationInsufficient(f"need {self.L + 1} coefficients, got {coeffs.shape[1]}")
        self.psi = np.ascontiguousarray(coeffs[:, : self.L + 1].T)
        self.z = 0j
        self._ops = {}

    def _op(self, h):
        key = (round(h.real, 15), round(h.imag, 15))
        if key not in self._ops:
            self._ops[key] = displacement_band(h, self.L).T.tocsr()
        return self._ops[key]

    def step(self, h):
        h = complex(h)
        lam = np.exp(-1j * (self.z * h.conjugate()).imag)
        self.psi = lam * (self._op(h) @ self.psi)
        self.z = self.z + h
        return self.psi

    def move_to(self, target, h):
        """Walk to ``target`` by axis-parallel steps of length h (lattice-aligned)."""
        target = complex(target)
        for attr, unit in (("real", 1.0), ("imag", 1j)):
            d = getattr(target - self.z, attr)
            nsteps = int(round(abs(d) / h))
            for _ in range(nsteps):
                self.step(math.copysign(h, d) * unit)
        self.z = target if abs(self.z - target) < 1e-9 else self.z
        return self.psi

    def levels(self, top):
        """Current values X_0..X_top, shape (top+1, B)."""
        return self.psi[: top + 1]


def walker_size(N, points, h):
    """Vector length L needed to walk a lattice covering ``points`` from 0."""
    pts = np.asarray(points, dtype=complex).ravel()
    span = np.abs(np.concatenate([pts, [0j]]))
    xr = np.ptp(np.concatenate([pts.real, [0.0]]))
    yr = np.ptp(np.concatenate([pts.imag, [0.0]]))
    dist = max(math.hypot(xr, yr), float(span.max())) + h
    return truncation_level(N, dist)


def snake_order(nx, ny):
    """Boustrophedon ordering of an nx-by-ny lattice as (ix, iy) pairs."""
    order = []
    for iy in range(ny):
        xs = range(nx) if iy % 2 == 0 else range(nx - 1, -1, -1)
        order.extend((ix, iy) for ix in xs)
    return order


def lattice_levels(coeffs, xs, ys, levels_fn, L=None):
    """Evaluate ``levels_fn(psi)`` at every point of the lattice xs x ys.

    ``xs`` and ``ys`` must be uniform with a common spacing h and contain
    lattice-aligned values (multiples of h offset from 0 are not required;
    the walker first moves from 0 to the corner exactly).
    Returns an array of shape (len(ys), len(xs)) + result shape.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    h = float(xs[1] - xs[0]) if xs.size > 1 else float(ys[1] - ys[0])
    walker = LevelWalker(coeffs, L)
    # reach the first corner with a single exact displacement in two legs
    corner = complex(xs[0], ys[0])
    _jump(walker, corner)
    results = None
    for ix, iy in snake_order(xs.size, ys.size):
        target = complex(xs[ix], ys[iy])
        d = target - walker.z
        if abs(d) > 1e-12:
            _jump(walker, target)
        val = levels_fn(walker.psi)
        if results is None:
            results = np.empty((ys.size, xs.size) + np.shape(val), dtype=np.asarray(val).dtype)
        results[iy, ix] = val
    return results


def _jump(walker, target):
    d = complex(target) - walker.z
    if abs(d) < 1e-15:
        return
    # long moves are split into pieces of length <= 0.25 to keep the band narrow
    pieces = max(1, int(math.ceil(abs(d) / 0.25)))
    for _ in range(pieces):
        walker.step(d / pieces)
    walker.z = complex(target)

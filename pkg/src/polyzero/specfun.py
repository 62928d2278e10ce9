"""Special functions for the Landau-level fields.

The central object is the displacement matrix

    U(z)_{m,n} = exp(-|z|^2/2) H_{m,n}(z, conj z),

whose columns are unit vectors in l^2.  Entries are computed along the
diagonals m - n = a, where U_{n+a,n} = e^{i a arg z} u_a(n) and u_a is a
normalized Laguerre function

    u_a(j) = sqrt(j!/(j+a)!) x^{a/2} e^{-x/2} L_j^a(x),    x = |z|^2.

u_a satisfies a three-term recurrence in j that is run in log-scaled form,
so no factorial or exponential is ever formed explicitly.  The column
ladder recurrence (raising operator applied to the coherent state) is kept
as ``method="ladder"``; it is exact in exact arithmetic but loses digits
once |z| exceeds about 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import binom, gammaln

from .errors import HermiteOverflow, TruncationInsufficient

__all__ = [
    "TAU_TRUNC",
    "DisplacementMatrix",
    "PochhammerValue",
    "complex_hermite",
    "complex_hermite_log",
    "displacement_block",
    "displacement_column",
    "displacement_matrix",
    "hermite_function",
    "hermite_functions",
    "laguerre",
    "laguerre_sum",
    "pochhammer",
    "truncation_level",
]

TAU_TRUNC = 1e-10
_RESCALE = 1e150
# log of the largest finite double, with a little head room
_LOG_MAX = 709.0


def truncation_level(N, R):
    """Coefficient truncation K covering level N at radius R.

    M_{n,z} has mean n+|z|^2 and variance (2n+1)|z|^2, so K sits about ten
    standard deviations above the largest mean.
    """
    N = int(N)
    R = float(R)
    return int(math.ceil(N + R * R + 10.0 * math.sqrt(2 * N + 1) * R + 50))


@dataclass(frozen=True)
class PochhammerValue:
    base: float
    length: int
    value: float
    log_value: float


def pochhammer(alpha, k):
    """Rising factorial (alpha)_k, with its logarithm when alpha > 0."""
    k = int(k)
    if k < 0:
        raise ValueError("length must be nonnegative")
    value = 1.0
    for j in range(k):
        value *= alpha + j
    if alpha > 0:
        log_value = float(gammaln(alpha + k) - gammaln(alpha))
    elif value != 0:
        log_value = math.log(abs(value))
    else:
        log_value = -math.inf
    return PochhammerValue(float(alpha), k, value, log_value)


def laguerre(n, alpha, x):
    """Generalized Laguerre polynomial L_n^alpha(x) by upward recurrence in n."""
    x = np.asarray(x, dtype=float)
    if n < 0:
        raise ValueError("degree must be nonnegative")
    prev = np.ones_like(x)
    if n == 0:
        return prev if prev.ndim else float(prev)
    cur = 1.0 + alpha - x
    for j in range(1, n):
        prev, cur = cur, ((2 * j + 1 + alpha - x) * cur - (j + alpha) * prev) / (j + 1)
    return cur if cur.ndim else float(cur)


def laguerre_sum(n, alpha, x):
    """L_n^alpha(x) from its explicit finite sum (reference evaluator)."""
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for j in range(n + 1):
        total = total + (-1) ** j * binom(n + alpha, n - j) * x**j / math.factorial(j)
    return total if total.ndim else float(total)


def complex_hermite_log(k, n, z):
    """Log-modulus and phase of H_{k,n}(z, conj z).

    Returns (log|H|, phase).  log|H| is -inf where H vanishes.
    """
    z = complex(z)
    x = abs(z) ** 2
    if k >= n:
        a, j, w = k - n, n, z
        sign = 1.0
    else:
        a, j, w = n - k, k, z.conjugate()
        sign = (-1.0) ** a
    lag = laguerre(j, a, x)
    if lag == 0.0 or (a > 0 and x == 0.0):
        return -math.inf, 0.0
    logmod = 0.5 * (gammaln(j + 1) - gammaln(j + a + 1)) + math.log(abs(lag))
    if a > 0:
        logmod += a * math.log(abs(w))
    phase = a * math.atan2(w.imag, w.real)
    if sign * lag < 0:
        phase += math.pi
    phase = math.remainder(phase, 2 * math.pi)
    return float(logmod), phase


def complex_hermite(k, n, z):
    """Complex Hermite polynomial H_{k,n}(z, conj z).

    Raises HermiteOverflow when the value is outside the double range; use
    :func:`complex_hermite_log` or :func:`displacement_matrix` there.
    """
    if k < 0 or n < 0:
        raise ValueError("indices must be nonnegative")
    logmod, phase = complex_hermite_log(k, n, z)
    if logmod == -math.inf:
        return 0j
    if logmod > _LOG_MAX:
        raise HermiteOverflow(f"|H_{{{k},{n}}}| = exp({logmod:.1f}) overflows")
    return complex(math.exp(logmod) * complex(math.cos(phase), math.sin(phase)))


def _diagonal_table(x, A, J, log_shift=None):
    """Real table u[..., a, j] = u_a(j) for a <= A, j <= J at x = |z|^2 >= 0.

    x may be an array; the table gets x's shape prepended.  ``log_shift``
    (same shape as x) multiplies each point's table by exp(log_shift).
    """
    x = np.asarray(x, dtype=float)
    shape = x.shape
    xs = x.reshape(-1, 1)
    a = np.arange(A + 1, dtype=float)[None, :]
    out = np.empty((J + 1, xs.shape[0], A + 1))
    pos = xs[:, 0] > 0
    with np.errstate(divide="ignore"):
        logx = np.where(xs > 0, np.log(np.where(xs > 0, xs, 1.0)), 0.0)
    # log u_a(0) = -x/2 + (a/2) log x - log(a!)/2
    s = -xs / 2 + 0.5 * a * logx - 0.5 * gammaln(a + 1)
    s = np.broadcast_to(s, (xs.shape[0], A + 1)).copy()
    if log_shift is not None:
        s += np.asarray(log_shift, dtype=float).reshape(-1, 1)
    vp = np.zeros_like(s)
    v = np.ones_like(s)
    es = np.exp(s)
    tiny = es == 0.0
    out[0] = es
    for j in range(J):
        vn = ((2 * j + a + 1 - xs) * v - math.sqrt(j) * np.sqrt(j + a) * vp) / np.sqrt(
            (j + 1) * (j + a + 1)
        )
        vp, v = v, vn
        big = np.maximum(np.abs(v), np.abs(vp))
        resc = big > _RESCALE
        if resc.any():
            f = big[resc]
            v[resc] /= f
            vp[resc] /= f
            s[resc] += np.log(f)
            es = np.exp(s)
            tiny = es == 0.0
        col = v * es
        if tiny.any():
            # the scale factor underflowed on its own; combine in log form
            with np.errstate(divide="ignore", under="ignore"):
                col[tiny] = np.sign(v[tiny]) * np.exp(np.log(np.abs(v[tiny])) + s[tiny])
        out[j + 1] = col
    # z = 0: identity pattern
    if not pos.all():
        out[:, ~pos, :] = 0.0
        out[:, ~pos, 0] = 1.0 if log_shift is None else np.exp(
            np.broadcast_to(np.asarray(log_shift, dtype=float).reshape(-1), pos.shape)[~pos]
        )[None, :]
    return np.moveaxis(out, 0, -1).reshape(shape + (A + 1, J + 1))


def displacement_block(z, K, N, method="diagonal", log_shift=None, columns=None):
    """Entries U(z)_{m,n} for m <= K, n <= N as a complex array.

    z may be an array of points; the result has shape z.shape + (K+1, N+1),
    or z.shape + (K+1, len(columns)) when only some columns are requested.
    With ``log_shift`` (broadcastable to z) the entries at each point are
    multiplied by exp(log_shift), which may exceed the unit bound.
    """
    if K < 0 or N < 0:
        raise ValueError("K and N must be nonnegative")
    z = np.asarray(z, dtype=complex)
    if method == "ladder":
        blk = _ladder_block(z, K, N)
        return blk if columns is None else blk[..., list(columns)]
    if method != "diagonal":
        raise ValueError(f"unknown method {method!r}")
    shape = z.shape
    zf = z.reshape(-1)
    x = np.abs(zf) ** 2
    theta = np.angle(zf)
    A_low = K  # m >= n: a = m - n <= K
    A_up = N  # m < n: a = n - m <= N
    A = max(A_low, A_up)
    J = min(K, N)
    if log_shift is not None:
        log_shift = np.broadcast_to(np.asarray(log_shift, dtype=float), shape).reshape(-1)
    u = _diagonal_table(x, A, J, log_shift)
    cols = np.arange(N + 1) if columns is None else np.asarray(columns, dtype=int)
    out = np.empty((zf.size, K + 1, cols.size), dtype=complex)
    m = np.arange(K + 1)[:, None]
    n = cols[None, :]
    diff = m - n
    aa = np.abs(diff)
    jj = np.minimum(m, n)
    # phase factors indexed by d = m - n + N: e^{i d theta} below the
    # diagonal, (-1)^a e^{-i a theta} above it
    d = np.arange(-N, K + 1)
    sgn = np.where(d < 0, (-1.0) ** np.abs(d), 1.0)
    table = sgn[None, :] * np.exp(1j * d[None, :] * theta[:, None])
    out[:] = u[:, aa, jj] * table[:, diff + N]
    return out.reshape(shape + (K + 1, cols.size))


def displacement_column(z, K, n):
    """Column n of U(z), entries m = 0..K, without forming the full table.

    Memory is O(K); useful for single columns of very large matrices.
    """
    z = complex(z)
    K, n = int(K), int(n)
    if K < 0 or n < 0:
        raise ValueError("K and n must be nonnegative")
    x = abs(z) ** 2
    theta = math.atan2(z.imag, z.real)
    out = np.zeros(K + 1, dtype=complex)
    if x == 0.0:
        if n <= K:
            out[n] = 1.0
        return out
    A = max(K - n, n)
    a = np.arange(A + 1, dtype=float)
    s = -x / 2 + 0.5 * a * math.log(x) - 0.5 * gammaln(a + 1)
    v = np.ones(A + 1)
    vp = np.zeros(A + 1)

    def value(idx):
        with np.errstate(under="ignore", divide="ignore"):
            return np.sign(v[idx]) * np.exp(np.log(np.abs(v[idx])) + s[idx])

    for j in range(n + 1):
        if j < n and n - j <= K:
            # upper entry U_{j,n} = (-1)^a e^{-i a theta} u_a(j) with a = n - j
            ai = n - j
            out[j] = (-1) ** ai * np.exp(-1j * ai * theta) * value(ai)
        if j == n:
            lo = np.arange(0, K - n + 1)
            out[n : K + 1] = np.exp(1j * lo * theta) * value(lo)
            break
        vn = ((2 * j + a + 1 - x) * v - math.sqrt(j) * np.sqrt(j + a) * vp) / np.sqrt((j + 1) * (j + a + 1))
        vp, v = v, vn
        big = np.maximum(np.abs(v), np.abs(vp))
        resc = big > _RESCALE
        if resc.any():
            f = big[resc]
            v[resc] /= f
            vp[resc] /= f
            s[resc] += np.log(f)
    return out


def _ladder_block(z, K, N):
    shape = z.shape
    zf = z.reshape(-1, 1)
    k = np.arange(K + 1)
    col = np.empty((zf.shape[0], K + 1), dtype=complex)
    col[:, 0] = np.exp(-np.abs(zf[:, 0]) ** 2 / 2)
    for j in range(K):
        col[:, j + 1] = zf[:, 0] * col[:, j] / math.sqrt(j + 1)
    out = np.empty((zf.shape[0], K + 1, N + 1), dtype=complex)
    out[:, :, 0] = col
    sq = np.sqrt(k)
    for n in range(N):
        prev = out[:, :, n]
        shifted = np.zeros_like(prev)
        shifted[:, 1:] = sq[1:] * prev[:, :-1]
        out[:, :, n + 1] = (shifted - np.conj(zf) * prev) / math.sqrt(n + 1)
    return out.reshape(shape + (K + 1, N + 1))


@dataclass(frozen=True)
class DisplacementMatrix:
    """Truncated displacement matrix at one point."""

    z: complex
    entries: np.ndarray
    K: int
    N: int
    deficits: np.ndarray = field(repr=False)

    def column(self, n):
        return self.entries[:, n]


def displacement_matrix(z, K, N, method="diagonal", check=True):
    """Build the (K+1) x (N+1) block of U(z) with per-column norm deficits.

    Raises TruncationInsufficient when ``check`` is set and some column
    misses more than TAU_TRUNC of its unit norm.
    """
    if K < N:
        raise ValueError("need K >= N")
    entries = displacement_block(complex(z), K, N, method=method)
    deficits = 1.0 - np.sum(np.abs(entries) ** 2, axis=0)
    if check and np.any(deficits > TAU_TRUNC):
        bad = int(np.argmax(deficits))
        raise TruncationInsufficient(
            f"column {bad} of U({complex(z)}) has norm deficit {deficits[bad]:.3g} "
            f"at K={K}; need about K={truncation_level(N, abs(complex(z)))}",
            deficits=deficits,
        )
    entries.setflags(write=False)
    deficits.setflags(write=False)
    return DisplacementMatrix(complex(z), entries, int(K), int(N), deficits)


def hermite_functions(nmax, t):
    """Array h[n, ...] = h_n(t) for n = 0..nmax.

    Normalization h_0(t) = 2^{1/4} exp(-pi t^2); the family is orthonormal in
    L^2(R) and satisfies
    h_{n+1} = 2 sqrt(pi/(n+1)) t h_n - sqrt(n/(n+1)) h_{n-1}.
    """
    t = np.asarray(t, dtype=float)
    out = np.empty((nmax + 1,) + t.shape)
    out[0] = 2.0**0.25 * np.exp(-np.pi * t * t)
    if nmax >= 1:
        out[1] = 2.0 * math.sqrt(np.pi) * t * out[0]
    for n in range(1, nmax):
        out[n + 1] = (
            2.0 * math.sqrt(np.pi / (n + 1)) * t * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
        )
    return out


def hermite_function(n, t):
    """Hermite function h_n(t), unit norm in L^2(R)."""
    h = hermite_functions(n, t)[n]
    return h if np.ndim(h) else float(h)

"""Short-time Fourier transforms of sampled white noise with Hermite windows.

With V_g f(x, xi) = int f(t) conj g(t - x) e^{-2 pi i xi t} dt and the
Hermite functions h_n (h_0 = 2^{1/4} e^{-pi t^2}),

    V_{h_n} h_k(conj(z) / sqrt(pi)) = e^{i x xi} U(z)_{k,n},   z = x + i xi,

so the STFT of white noise is e^{i x xi} X_n(z) at the time-frequency point
(Re z, -Im z) / sqrt(pi).  White noise is sampled on a uniform grid with
variance 1/dt per sample; the STFT is the exact transform of the resulting
discrete measure, evaluated by a matrix DFT.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import UnderResolved
from .fields import stream
from .specfun import hermite_functions
from .zeros import find_zeros, one_point_intensity, window_area

__all__ = [
    "DEFAULT_DT",
    "DEFAULT_T",
    "DEFAULT_STEP",
    "SampledSignal",
    "Spectrogram",
    "MultitaperResult",
    "STFTField",
    "white_noise",
    "deterministic_signal",
    "hermite_band",
    "check_resolution",
    "stft",
    "stft_levels",
    "wn_spectrogram",
    "taper_levels",
    "multitaper_average",
    "tf_to_z",
    "z_to_tf",
    "spectrogram_zeros",
    "zero_intensity",
    "predicted_zero_intensity",
]

DEFAULT_DT = 1.0 / 64
DEFAULT_T = 32.0
DEFAULT_STEP = 1.0 / 16
# Gaussian tail allowance beyond the turning point of h_n
_TAIL = 3.0
_CHUNK = 256


@dataclass(frozen=True)
class SampledSignal:
    """Samples on t_j = -T/2 + j dt, j = 0..M-1."""

    dt: float
    samples: np.ndarray = field(repr=False)
    kind: str = "deterministic"

    @property
    def T(self):
        return self.samples.size * self.dt

    @property
    def t(self):
        return -self.T / 2 + self.dt * np.arange(self.samples.size)


def _grid_size(dt, T):
    M = int(round(T / dt))
    if M < 2 or abs(M * dt - T) > 1e-9 * T:
        raise ValueError("T must be a positive multiple of dt")
    return M


def white_noise(dt=DEFAULT_DT, T=DEFAULT_T, seed=0, realization=0):
    """Complex white noise samples with E|w_j|^2 = 1/dt."""
    M = _grid_size(dt, T)
    g = stream(seed, realization).standard_normal((M, 2))
    w = (g[:, 0] + 1j * g[:, 1]) / math.sqrt(2.0 * dt)
    return SampledSignal(dt=float(dt), samples=w, kind="white_noise")


def deterministic_signal(fn, dt=DEFAULT_DT, T=DEFAULT_T):
    M = _grid_size(dt, T)
    t = -T / 2 + dt * np.arange(M)
    return SampledSignal(dt=float(dt), samples=np.asarray(fn(t), dtype=complex), kind="deterministic")


def hermite_band(n):
    """Turning point sqrt((2n+1)/(2 pi)) of h_n, in time and in frequency."""
    return math.sqrt((2 * n + 1) / (2 * math.pi))


def check_resolution(n, dt, T, x_max, xi_max):
    """Raise UnderResolved unless samples resolve h_n on the requested lattice.

    The integrand h_n(t - x) e^{-2 pi i xi t} carries frequencies up to
    |xi| + B_n (B_n the turning point, plus a Gaussian tail allowance), so
    the sampling rate must exceed twice that; the window must also fit in
    [-T/2, T/2] for every lattice time.
    """
    reach = hermite_band(n) + _TAIL
    if 1.0 / dt < 2.0 * (abs(xi_max) + reach):
        raise UnderResolved(
            f"dt = {dt:.4g} too coarse for h_{n} at |xi| <= {xi_max:.3g}; "
            f"need dt <= {1.0 / (2.0 * (abs(xi_max) + reach)):.4g}"
        )
    if T / 2 < abs(x_max) + reach:
        raise UnderResolved(f"T = {T:.4g} too short for h_{n} at |x| <= {x_max:.3g}; need T >= {2 * (abs(x_max) + reach):.4g}")


@dataclass
class Spectrogram:
    """|V_{h_n} f|^2 on the lattice xs x xis (rows are frequencies)."""

    n: int
    xs: np.ndarray
    xis: np.ndarray
    values: np.ndarray
    stft: np.ndarray | None = field(default=None, repr=False)

    def z_grid(self):
        """Matching points of the z-plane, z = sqrt(pi) (x - i xi)."""
        return tf_to_z(self.xs[None, :], self.xis[:, None])


def tf_to_z(x, xi):
    return math.sqrt(math.pi) * (np.asarray(x) - 1j * np.asarray(xi))


def z_to_tf(z):
    z = np.asarray(z, dtype=complex)
    return z.real / math.sqrt(math.pi), -z.imag / math.sqrt(math.pi)


def stft_levels(signal, levels, xs, xis, check=True):
    """V_{h_n} f on the lattice for each n in ``levels``; shape (len, nxi, nx)."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    xis = np.atleast_1d(np.asarray(xis, dtype=float))
    levels = [int(n) for n in levels]
    if check:
        check_resolution(max(levels), signal.dt, signal.T, np.abs(xs).max(), np.abs(xis).max())
    t = signal.t
    E = np.exp(-2j * np.pi * t[:, None] * xis[None, :])
    H = hermite_functions(max(levels), t[None, :] - xs[:, None])
    out = np.empty((len(levels), xis.size, xs.size), dtype=complex)
    for i, n in enumerate(levels):
        out[i] = ((H[n] * signal.samples[None, :]) @ E).T * signal.dt
    return out


def stft(signal, n, xs, xis, return_complex=False, check=True):
    """Spectrogram of ``signal`` with window h_n."""
    V = stft_levels(signal, [n], xs, xis, check=check)[0]
    return Spectrogram(
        n=int(n), xs=np.asarray(xs, dtype=float), xis=np.asarray(xis, dtype=float), values=np.abs(V) ** 2,
        stft=V if return_complex else None,
    )


def wn_spectrogram(n, dt=DEFAULT_DT, T=DEFAULT_T, xs=None, xis=None, seed=0, realization=0, return_complex=False):
    """Spectrogram of one white-noise realization; default lattice [-4, 4]^2."""
    xs = np.arange(-4.0, 4.0 + 1e-12, DEFAULT_STEP) if xs is None else xs
    xis = xs if xis is None else xis
    return stft(white_noise(dt, T, seed, realization), n, xs, xis, return_complex=return_complex)


def taper_levels(scheme, N):
    """Window levels of a multitaper scheme: uniform(N) or paired4k(N pairs)."""
    if N < 1:
        raise ValueError("N must be positive")
    if scheme == "uniform":
        return list(range(N))
    if scheme == "paired4k":
        return [m for k in range(N) for m in (4 * k, 4 * k + 1)]
    raise ValueError(f"unknown scheme {scheme!r}")


@dataclass
class MultitaperResult:
    scheme: str
    levels: list
    xs: np.ndarray
    xis: np.ndarray
    values: np.ndarray  # average of the first realization
    mean: np.ndarray  # mean over realizations
    variance: np.ndarray  # per-point variance over realizations
    realizations: int

    def sup_deviation(self, mask=None):
        dev = np.abs(self.values - 1.0)
        return float((dev if mask is None else dev[mask]).max())


def multitaper_average(scheme, N, dt=DEFAULT_DT, T=DEFAULT_T, xs=None, xis=None, seed=0, realizations=1):
    """Average of white-noise spectrograms over the scheme's windows."""
    xs = np.arange(-4.0, 4.0 + 1e-12, DEFAULT_STEP) if xs is None else np.asarray(xs, dtype=float)
    xis = xs if xis is None else np.asarray(xis, dtype=float)
    levels = taper_levels(scheme, N)
    avgs = np.empty((realizations, xis.size, xs.size))
    for r in range(realizations):
        V = stft_levels(white_noise(dt, T, seed, r), levels, xs, xis)
        avgs[r] = np.mean(np.abs(V) ** 2, axis=0)
    var = avgs.var(axis=0, ddof=1) if realizations > 1 else np.full(avgs.shape[1:], np.nan)
    return MultitaperResult(
        scheme=scheme, levels=levels, xs=xs, xis=xis, values=avgs[0], mean=avgs.mean(axis=0),
        variance=var, realizations=int(realizations),
    )


class STFTField:
    """X_n(z) = e^{-i x xi} V_{h_n} f(conj(z)/sqrt(pi)) at arbitrary z.

    Provides the interface the zero finder expects, so spectrogram zeros
    are located and verified exactly as for the sampled fields.
    """

    polynomial = False
    radius = math.inf

    def __init__(self, signal, max_level):
        self.signal = signal
        self.max_level = int(max_level)

    def values(self, z, levels=None, cache_key=None):
        if levels is None:
            levels = list(range(self.max_level + 1))
        levels = [int(n) for n in np.atleast_1d(levels)]
        z = np.asarray(z, dtype=complex)
        zf = z.ravel()
        x, xi = z_to_tf(zf)
        t = self.signal.t
        f = self.signal.samples * self.signal.dt
        top = max(levels)
        out = np.empty((zf.size, len(levels)), dtype=complex)
        # points sorted by time so that each chunk needs only the samples
        # under its windows
        reach = hermite_band(top) + _TAIL + 2.0
        order = np.argsort(x, kind="stable")
        for s in range(0, zf.size, _CHUNK):
            sl = order[s : s + _CHUNK]
            j0, j1 = np.searchsorted(t, [x[sl].min() - reach, x[sl].max() + reach])
            tt = t[j0:j1]
            H = hermite_functions(top, tt[None, :] - x[sl, None])
            E = f[None, j0:j1] * np.exp(-2j * np.pi * xi[sl, None] * tt[None, :])
            for i, n in enumerate(levels):
                out[sl, i] = np.sum(H[n] * E, axis=1)
        out *= np.exp(-1j * zf.real * zf.imag)[:, None]
        return out.reshape(z.shape + (len(levels),))


def spectrogram_zeros(n, signal, window_tf, check=True):
    """Zeros of V_{h_n} f in the time-frequency window (x0, x1, xi0, xi1).

    Returns (x, xi) arrays and the underlying z-plane ZeroSet.
    """
    x0, x1, k0, k1 = window_tf
    if check:
        check_resolution(n + 1, signal.dt, signal.T, max(abs(x0), abs(x1)) + 0.5, max(abs(k0), abs(k1)) + 0.5)
    s = math.sqrt(math.pi)
    # (x, xi) -> z = sqrt(pi) (x - i xi) maps the box onto a box
    zwin = (s * x0, s * x1, -s * k1, -s * k0)
    zs = find_zeros(n, STFTField(signal, n + 1), zwin)
    x, xi = z_to_tf(zs.zeros)
    return x, xi, zs


def predicted_zero_intensity(n):
    """Zeros per unit time-frequency area: pi times the z-plane intensity."""
    return math.pi * one_point_intensity(n)


def zero_intensity(n, window_tf, realizations, dt=DEFAULT_DT, T=DEFAULT_T, seed=0):
    """Mean zero count of white-noise spectrograms per unit time-frequency area."""
    counts = []
    excluded = 0
    for r in range(realizations):
        _, _, zs = spectrogram_zeros(n, white_noise(dt, T, seed, r), window_tf)
        if zs.flagged:
            excluded += 1
            continue
        counts.append(len(zs))
    counts = np.asarray(counts, dtype=float)
    area = window_area(window_tf)
    se = counts.std(ddof=1) / math.sqrt(counts.size) / area if counts.size > 1 else math.inf
    return {"intensity": counts.mean() / area, "stderr": se, "realizations": int(counts.size), "excluded": excluded}

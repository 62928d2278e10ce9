"""Zero sets of the fields X_n: location, intensities, cross pair correlations.

Zeros are found by a grid scan followed by damped Newton iteration on
(Re X_n, Im X_n).  The derivatives come from the ladder identities

    d/dz    X_n =  sqrt(n+1) X_{n+1} + (conj z / 2) X_n
    d/dzbar X_n = -sqrt(n)   X_{n-1} - (z / 2) X_n

so one Newton step costs three field evaluations and no finite differences.
The winding number of the phase around every grid cell is used as an
independent completeness check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .fields import TILE, CoefficientVector, FieldBasis, FieldSample, coefficient_batch, sample_coefficients
from .specfun import truncation_level

__all__ = [
    "TAU_ZERO",
    "PairCorrelationEstimate",
    "ZeroSet",
    "default_bins",
    "find_zeros",
    "intensity_estimate",
    "one_point_intensity",
    "polynomial_root_bound",
    "polynomial_zero_sets",
    "pair_correlation_empirical",
    "pair_correlations",
    "scan_spacing",
    "square_window",
]

TAU_ZERO = 1e-10
STEP_TOL = 1e-11
MAX_ITER = 50
MIN_FACTOR = 0.75
# converged roots closer than this are the same root; opposite-sign pairs
# of level n >= 1 can sit far closer than the scan spacing
DEDUP_RADIUS = 1e-8
# margin over 1/sqrt(2) for the first-order zero-distance screen
SUSPECT_FACTOR = 0.8
EXPLAIN_FACTOR = 3.0


def scan_spacing(n):
    return 0.5 / math.sqrt(n + 1)


def square_window(half):
    return (-float(half), float(half), -float(half), float(half))


def window_area(window):
    x0, x1, y0, y1 = window
    return (x1 - x0) * (y1 - y0)


def _inside(z, window):
    x0, x1, y0, y1 = window
    return (z.real >= x0) & (z.real <= x1) & (z.imag >= y0) & (z.imag <= y1)


def polynomial_root_bound(coeffs):
    """Fujiwara bound on the root moduli of sum_k zeta_k z^k / sqrt(k!)."""
    z = np.asarray(coeffs.values if hasattr(coeffs, "values") else coeffs, dtype=complex)
    K = z.size - 1
    logc = np.log(np.abs(z) + 1e-300) - 0.5 * np.array([math.lgamma(k + 1) for k in range(K + 1)])
    j = np.arange(1, K + 1)
    terms = (logc[K - j] - logc[K]) / j
    terms[-1] = (logc[0] - math.log(2.0) - logc[K]) / K
    return 2.0 * math.exp(terms.max())


def one_point_intensity(n):
    """rho_n = (n + 1/2 + 1/(4n+2)) / pi."""
    return (n + 0.5 + 1.0 / (4 * n + 2)) / math.pi


@dataclass
class ZeroSet:
    level: int
    window: tuple
    zeros: np.ndarray
    jacobian_sign: np.ndarray
    jacobian: np.ndarray
    residual: np.ndarray
    iterations: np.ndarray
    flagged: int = 0
    diagnostics: dict = field(default_factory=dict)

    def __len__(self):
        return int(self.zeros.size)


def _grid(window, delta):
    x0, x1, y0, y1 = window
    xs = delta * np.arange(math.floor(x0 / delta) - 1, math.ceil(x1 / delta) + 2)
    ys = delta * np.arange(math.floor(y0 / delta) - 1, math.ceil(y1 / delta) + 2)
    return xs, ys


def _levels(n):
    return [n, n + 1] + ([n - 1] if n > 0 else [])


def _derivs(n, z, vals):
    X = vals[..., 0]
    A = math.sqrt(n + 1) * vals[..., 1] + 0.5 * np.conj(z) * X
    B = -0.5 * z * X
    if n > 0:
        B = B - math.sqrt(n) * vals[..., 2]
    return X, A, B


def _newton(sample, n, z0, bound, known=None, near=0.0, leash=np.inf):
    """Damped Newton from every start in z0.

    Returns (z, |X|, det, iterations, status) with status 0 converged,
    1 not converged, 2 singular Jacobian, 3 left the search region,
    4 retired: within ``near`` of a point of the KD-tree ``known`` or
    further than ``leash`` from its start.
    """
    z0 = np.array(z0, dtype=complex).ravel()
    z = z0.copy()
    m = z.size
    status = np.ones(m, dtype=np.int8)
    iters = np.zeros(m, dtype=np.int32)
    res = np.full(m, np.inf)
    det = np.zeros(m)
    active = np.arange(m)
    levels = _levels(n)
    X, A, B = _derivs(n, z, sample.values(z, levels))
    absX = np.abs(X)
    for it in range(MAX_ITER):
        if active.size == 0:
            break
        za, Xa, Aa, Ba = z[active], X[active], A[active], B[active]
        d = np.abs(Aa) ** 2 - np.abs(Ba) ** 2
        scale = np.abs(Aa) ** 2 + np.abs(Ba) ** 2
        sing = np.abs(d) <= 1e-14 * np.maximum(scale, 1e-300)
        with np.errstate(divide="ignore", invalid="ignore"):
            delta = (Ba * np.conj(Xa) - np.conj(Aa) * Xa) / d
        delta[sing] = 0
        # Armijo backtracking on |X|: the full step first, then all
        # remaining halvings of the failures in a single batch
        ts = 0.5 ** np.arange(10)
        t = np.ones(active.size)
        trial = za + delta
        newX = np.empty(active.size, dtype=complex)
        newA = np.empty_like(newX)
        newB = np.empty_like(newX)
        todo = np.arange(active.size)
        for stage in (ts[:1], ts[1:]):
            if todo.size == 0:
                break
            tz = za[todo, None] + stage[None, :] * delta[todo, None]
            ok_region = np.abs(tz) <= bound
            tz_eval = np.where(ok_region, tz, za[todo, None])
            tX, tA, tB = _derivs(n, tz_eval, sample.values(tz_eval, levels))
            good = (np.abs(tX) <= (1 - 1e-4 * stage[None, :]) * np.abs(Xa[todo, None])) | (
                np.abs(delta[todo, None]) * stage[None, :] < STEP_TOL
            )
            good &= ok_region
            anyg = good.any(axis=1)
            first = np.argmax(good, axis=1)
            idx = todo[anyg]
            sel = (np.flatnonzero(anyg), first[anyg])
            newX[idx], newA[idx], newB[idx] = tX[sel], tA[sel], tB[sel]
            t[idx] = stage[first[anyg]]
            trial[idx] = tz[sel]
            todo = todo[~anyg]
        # starts where no decrease was found keep their position
        if todo.size:
            trial[todo] = za[todo]
            newX[todo], newA[todo], newB[todo] = Xa[todo], Aa[todo], Ba[todo]
        z[active], X[active], A[active], B[active] = trial, newX, newA, newB
        iters[active] = it + 1
        absX = np.abs(newX)
        step = t * np.abs(delta)
        conv = (absX < TAU_ZERO) & (step < STEP_TOL)
        conv |= absX == 0
        stalled = np.zeros(active.size, dtype=bool)
        stalled[todo] = True
        escaped = np.abs(trial) > bound
        done_sing = sing & ~conv
        status[active[conv]] = 0
        status[active[done_sing]] = 2
        status[active[escaped & ~conv]] = 3
        # stalled points already at the zero up to rounding are accepted
        st_ok = stalled & (absX < TAU_ZERO) & (np.abs(delta) < 1e-9)
        status[active[st_ok]] = 0
        finished = conv | done_sing | escaped | stalled
        if known is not None:
            d_known, _ = known.query(np.column_stack([trial.real, trial.imag]))
            retired = ((d_known < near) | (np.abs(trial - z0[active]) > leash)) & ~finished
            status[active[retired]] = 4
            finished |= retired
        active = active[~finished]
    res[:] = np.abs(X)
    det[:] = np.abs(A) ** 2 - np.abs(B) ** 2
    return z, res, det, iters, status


def _dedup(z, radius):
    if z.size == 0:
        return np.zeros(0, dtype=int)
    pts = np.column_stack([z.real, z.imag])
    tree = cKDTree(pts)
    keep = np.ones(z.size, dtype=bool)
    for i in range(z.size):
        if not keep[i]:
            continue
        for j in tree.query_ball_point(pts[i], radius):
            if j > i:
                keep[j] = False
    return np.flatnonzero(keep)


def _wrap(a):
    return (a + np.pi) % (2 * np.pi) - np.pi


def _segment_distance(p, a, b):
    ab = b - a
    t = np.clip(np.real((p - a) * np.conj(ab)) / np.abs(ab) ** 2, 0.0, 1.0)
    return np.abs(p - (a + t * ab))


def _refined_increments(sample, n, A, B, C, m, gauge):
    """Phase increments along segments A->B, each cut into m pieces.

    Returns (total increment, largest single-piece increment) per segment.
    """
    m = np.asarray(m, dtype=int)
    seg = np.repeat(np.arange(A.size), m + 1)
    start = np.concatenate([[0], np.cumsum(m + 1)[:-1]])
    t = (np.arange(seg.size) - start[seg]) / m[seg]
    P = A[seg] + (B - A)[seg] * t
    W = sample.values(P, [n])[..., 0]
    if gauge:
        W = W * np.exp(1j * np.imag(C[seg] * np.conj(P)))
    d = _wrap(np.diff(np.angle(W)))
    # drop the differences that straddle two segments
    d = np.append(d, 0.0)
    d[start[1:] - 1] = 0.0
    d[-1] = 0.0
    total = np.add.reduceat(d, start)
    biggest = np.maximum.reduceat(np.abs(d), start)
    return total, biggest


def _edge_increments(sample, n, A, B, VA, VB, delta, roots):
    """Ungauged phase increment of X_n along each edge A->B.

    Each edge is gauged by exp(i Im(c conj z)) with c its midpoint, which
    removes the position-dependent phase drift of X_n locally; the gauge's
    own (linear) contribution is subtracted exactly afterwards.  Truncated
    polynomials behave like z^K away from the bulk, where the gauge would
    add rather than remove drift, so they are left ungauged.  Edges whose
    gauged increment exceeds pi/2, and edges passing close to a known root
    (where a coarse increment can alias by 2 pi), are subdivided.
    """
    gauge = not sample.polynomial
    C = 0.5 * (A + B) if gauge else np.zeros_like(A)
    ga = np.imag(C * np.conj(A))
    gb = np.imag(C * np.conj(B))
    inc = _wrap(np.angle(VB) + gb - np.angle(VA) - ga)
    pieces = np.where(np.abs(inc) > np.pi / 2, 4, 1)
    if roots is not None and len(roots):
        roots = np.asarray(roots)
        tree = cKDTree(np.column_stack([roots.real, roots.imag]))
        mid = 0.5 * (A + B)
        kq = min(4, roots.size)
        # a root farther than delta/2 from an edge turns the phase by less
        # than pi/2 along it, so only nearer roots need attention
        dd, ii = tree.query(np.column_stack([mid.real, mid.imag]), k=kq, distance_upper_bound=delta)
        dd = dd.reshape(mid.size, kq)
        ii = ii.reshape(mid.size, kq)
        hit = np.isfinite(dd)
        if hit.any():
            e, col = np.nonzero(hit)
            dist = np.full(hit.shape, np.inf)
            dist[e, col] = _segment_distance(roots[ii[e, col]], A[e], B[e])
            dmin = dist.min(axis=1)
            close = dmin <= 0.5 * delta
            m = delta / np.maximum(dmin[close], 1e-9)
            m = 2 ** np.ceil(np.log2(np.clip(m, 4.0, 8192.0)))
            pieces[close] = np.maximum(pieces[close], m.astype(int))
    idx = np.flatnonzero(pieces > 1)
    for _ in range(2):
        if idx.size == 0:
            break
        tot, big = _refined_increments(sample, n, A[idx], B[idx], C[idx], pieces[idx], gauge)
        inc[idx] = tot
        again = big > np.pi / 2
        idx = idx[again]
        pieces[idx] = np.minimum(pieces[idx] * 16, 2**16)
    return inc - (gb - ga)


def _edges(sample, n, Z, V, roots, hmask=None, vmask=None, h=None, v=None):
    """Phase increments on horizontal edges Z[i, j] -> Z[i, j+1] and vertical
    edges Z[i, j] -> Z[i+1, j]; with masks only the selected ones are
    (re)computed into the given arrays."""
    delta = abs(Z[0, 1] - Z[0, 0])
    if h is None:
        h = np.zeros((Z.shape[0], Z.shape[1] - 1))
        v = np.zeros((Z.shape[0] - 1, Z.shape[1]))
        hmask = np.ones(h.shape, dtype=bool)
        vmask = np.ones(v.shape, dtype=bool)
    if hmask.any():
        h[hmask] = _edge_increments(
            sample, n, Z[:, :-1][hmask], Z[:, 1:][hmask], V[:, :-1][hmask], V[:, 1:][hmask], delta, roots
        )
    if vmask.any():
        v[vmask] = _edge_increments(
            sample, n, Z[:-1, :][vmask], Z[1:, :][vmask], V[:-1, :][vmask], V[1:, :][vmask], delta, roots
        )
    return h, v


def _winding(h, v):
    total = h[:-1, :] + v[:, 1:] - h[1:, :] - v[:, :-1]
    return np.rint(total / (2 * np.pi)).astype(int)


def _cell_winding(sample, n, Z, V, roots=None):
    """Winding number of X_n around every grid cell."""
    return _winding(*_edges(sample, n, Z, V, roots))


def find_zeros(n, sample, window, spacing=None):
    """All zeros of X_n inside ``window`` = (xmin, xmax, ymin, ymax)."""
    if sample.max_level < n + 1:
        raise ValueError(f"sample must carry level {n + 1} for Newton steps")
    delta = scan_spacing(n) if spacing is None else float(spacing)
    xs, ys = _grid(window, delta)
    Z = xs[None, :] + 1j * ys[:, None]
    key = ("scan", n, delta, xs[0], xs[-1], ys[0], ys[-1])
    V3 = sample.values(Z, _levels(n), cache_key=key)
    V = V3[..., 0]
    mag = np.abs(V)
    lo = ndimage.minimum_filter(mag, size=3, mode="nearest")
    hi = ndimage.maximum_filter(mag, size=3, mode="nearest")
    cand = (mag <= lo) & (mag < MIN_FACTOR * hi)
    cand[0, :] = cand[-1, :] = cand[:, 0] = cand[:, -1] = False
    starts = Z[cand]
    bound = max(abs(complex(a, b)) for a in (xs[0], xs[-1]) for b in (ys[0], ys[-1])) + 2 * delta
    bound = min(bound, sample.radius)

    z, res, det, iters, status = _newton(sample, n, starts, bound)

    roots = z[status == 0]
    rdet = det[status == 0]
    rres = res[status == 0]
    rit = iters[status == 0]
    retried = 0

    # retry failed starts from four sub-cell points
    failed = starts[(status == 1) | (status == 2)]
    if failed.size:
        offs = 0.25 * delta * np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j])
        seeds = (failed[:, None] + offs[None, :]).ravel()
        z2, res2, det2, it2, st2 = _newton(sample, n, seeds, bound)
        roots = np.concatenate([roots, z2[st2 == 0]])
        rdet = np.concatenate([rdet, det2[st2 == 0]])
        rres = np.concatenate([rres, res2[st2 == 0]])
        rit = np.concatenate([rit, it2[st2 == 0]])
        retried += failed.size
    keep = _dedup(roots, DEDUP_RADIUS)
    roots, rdet, rres, rit = roots[keep], rdet[keep], rres[keep], rit[keep]

    # nodes where the linear model X + A h + B conj(h) can vanish within one
    # spacing, yet no zero was found nearby: close +/- pairs inside a cell
    # leave no local minimum on the grid and no net winding
    _, A, B = _derivs(n, Z, V3)
    # every point lies within delta/sqrt(2) of a node; est is the first-order
    # distance from a node to the nearest zero
    est = mag / np.maximum(np.abs(A) + np.abs(B), 1e-300)
    susp = est < SUSPECT_FACTOR * delta
    susp &= ~cand
    susp[0, :] = susp[-1, :] = susp[:, 0] = susp[:, -1] = False
    if roots.size and susp.any():
        # a suspicious node is explained by a known zero at a distance
        # comparable to its estimate
        tree = cKDTree(np.column_stack([roots.real, roots.imag]))
        pts = Z[susp]
        Xs, As, Bs = V[susp], A[susp], B[susp]
        with np.errstate(divide="ignore", invalid="ignore"):
            step = (Bs * np.conj(Xs) - np.conj(As) * Xs) / (np.abs(As) ** 2 - np.abs(Bs) ** 2)
        pred = pts + np.where(np.isfinite(step), step, 0)
        dist, _ = tree.query(np.column_stack([pts.real, pts.imag]))
        dpred, _ = tree.query(np.column_stack([pred.real, pred.imag]))
        explained = (dist <= EXPLAIN_FACTOR * est[susp]) | (dpred < 0.25 * delta)
        extra = pts[~explained]
    else:
        extra = Z[susp]
    if extra.size:
        # starts heading for a known zero, or wandering off, are dropped early
        known = cKDTree(np.column_stack([roots.real, roots.imag])) if roots.size else None
        z3, res3, det3, it3, st3 = _newton(sample, n, extra, bound, known, 0.1 * delta, 2.0 * delta)
        roots = np.concatenate([roots, z3[st3 == 0]])
        rdet = np.concatenate([rdet, det3[st3 == 0]])
        rres = np.concatenate([rres, res3[st3 == 0]])
        rit = np.concatenate([rit, it3[st3 == 0]])
        keep = _dedup(roots, DEDUP_RADIUS)
        roots, rdet, rres, rit = roots[keep], rdet[keep], rres[keep], rit[keep]
    h, v = _edges(sample, n, Z, V, roots)
    wind = _winding(h, v)

    # winding completeness check on every cell, with one retry per bad cell
    def mismatched(roots, rdet):
        cx = np.floor((roots.real - xs[0]) / delta).astype(int)
        cy = np.floor((roots.imag - ys[0]) / delta).astype(int)
        ok = (cx >= 0) & (cx < wind.shape[1]) & (cy >= 0) & (cy < wind.shape[0])
        found = np.zeros_like(wind)
        np.add.at(found, (cy[ok], cx[ok]), np.sign(rdet[ok]).astype(int))
        bad = found != wind
        # cells in the outer padding ring do not matter
        bad[0, :] = bad[-1, :] = bad[:, 0] = bad[:, -1] = False
        return np.argwhere(bad)

    bad = mismatched(roots, rdet)
    # retry mismatched cells: first a few fixed points plus rings around the
    # roots already found there (close +/- pairs share a cell), then a dense
    # sub-grid of the cell
    sub = np.linspace(0.0625, 0.9375, 8)
    rounds = (
        np.array([0.5 + 0.5j, 0.25 + 0.25j, 0.75 + 0.25j, 0.25 + 0.75j, 0.75 + 0.75j]),
        (sub[None, :] + 1j * sub[:, None]).ravel(),
    )
    ring = np.exp(2j * np.pi * np.arange(8) / 8)
    ring = np.concatenate([delta / 16 * ring, delta / 4 * ring])
    for offs in rounds:
        if not bad.size:
            break
        cy, cx = bad[:, 0], bad[:, 1]
        base = xs[cx] + 1j * ys[cy]
        seeds = [(base[:, None] + delta * offs[None, :]).ravel()]
        if offs.size < 8:
            rx = np.floor((roots.real - xs[0]) / delta).astype(int)
            ry = np.floor((roots.imag - ys[0]) / delta).astype(int)
            cells = set(zip(cy.tolist(), cx.tolist()))
            near = np.array([(a, b) in cells for a, b in zip(ry.tolist(), rx.tolist())], dtype=bool)
            if near.any():
                seeds.append((roots[near][:, None] + ring[None, :]).ravel())
        z2, res2, det2, it2, st2 = _newton(sample, n, np.concatenate(seeds), bound)
        roots = np.concatenate([roots, z2[st2 == 0]])
        rdet = np.concatenate([rdet, det2[st2 == 0]])
        rres = np.concatenate([rres, res2[st2 == 0]])
        rit = np.concatenate([rit, it2[st2 == 0]])
        keep = _dedup(roots, DEDUP_RADIUS)
        roots, rdet, rres, rit = roots[keep], rdet[keep], rres[keep], rit[keep]
        retried += bad.shape[0]
        # only the edges of the retried cells can change
        hmask = np.zeros(h.shape, dtype=bool)
        vmask = np.zeros(v.shape, dtype=bool)
        hmask[cy, cx] = hmask[cy + 1, cx] = True
        vmask[cy, cx] = vmask[cy, cx + 1] = True
        h, v = _edges(sample, n, Z, V, roots, hmask, vmask, h, v)
        wind = _winding(h, v)
        bad = mismatched(roots, rdet)
    # flag only unresolved cells that touch the window
    flagged = 0
    if bad.size:
        cy, cx = bad[:, 0], bad[:, 1]
        cells = xs[cx] + 1j * ys[cy] + 0.5 * delta * (1 + 1j)
        grown = tuple(v + s * delta for v, s in zip(window, (-1, 1, -1, 1)))
        flagged = int(np.count_nonzero(_inside(cells, grown)))

    inside = _inside(roots, window)
    roots, rdet, rres, rit = roots[inside], rdet[inside], rres[inside], rit[inside]
    order = np.lexsort((roots.imag, roots.real))
    return ZeroSet(
        level=n,
        window=tuple(window),
        zeros=roots[order],
        jacobian_sign=np.sign(rdet[order]).astype(int),
        jacobian=rdet[order],
        residual=rres[order],
        iterations=rit[order],
        flagged=flagged,
        diagnostics={
            "spacing": delta,
            "candidates": int(starts.size),
            "extra_starts": int(extra.size),
            "retried": int(retried),
            "winding_total": int(wind[1:-1, 1:-1].sum()),
        },
    )


def _tiles_for(window, pad):
    x0, x1, y0, y1 = window
    i0, i1 = math.floor((x0 - pad) / TILE - 0.5), math.ceil((x1 + pad) / TILE + 0.5)
    j0, j1 = math.floor((y0 - pad) / TILE - 0.5), math.ceil((y1 + pad) / TILE + 0.5)
    return [(i, j) for i in range(i0, i1 + 1) for j in range(j0, j1 + 1)]


def _samples(levels_top, window, seed, realizations, polynomial_degree=None, batch=25):
    """Yield FieldSamples for the given realization indices, batched."""
    x0, x1, y0, y1 = window
    R = math.hypot(max(abs(x0), abs(x1)), max(abs(y0), abs(y1))) + 1.0
    if polynomial_degree is not None:
        K = int(polynomial_degree)
        basis = None
    else:
        K = truncation_level(levels_top, R)
        basis = FieldBasis(K, levels_top) if K > 160 else None
    realizations = list(realizations)
    for s in range(0, len(realizations), batch):
        chunk = realizations[s : s + batch]
        rows = coefficient_batch(K, seed, chunk)
        samples = [
            FieldSample(
                CoefficientVector(int(seed), row, K, r),
                levels_top,
                basis=basis,
                polynomial=polynomial_degree is not None,
            )
            for r, row in zip(chunk, rows)
        ]
        if basis is not None:
            basis.attach_tiles(samples, _tiles_for(window, 1.0))
        for smp in samples:
            yield smp


def intensity_estimate(n, realizations, window, seed, return_counts=False):
    """Zero intensity of level n: mean count per unit area, with stderr."""
    area = window_area(window)
    counts = []
    excluded = 0
    for smp in _samples(n + 1, window, seed, range(realizations)):
        zs = find_zeros(n, smp, window)
        if zs.flagged:
            excluded += 1
            continue
        counts.append(len(zs))
    counts = np.asarray(counts, dtype=float)
    est = counts.mean() / area
    se = counts.std(ddof=1) / math.sqrt(counts.size) / area if counts.size > 1 else math.inf
    out = {"intensity": est, "stderr": se, "realizations": int(counts.size), "excluded": excluded}
    if return_counts:
        out["counts"] = counts
    return out


def polynomial_zero_sets(degree, seed, levels=(0,), realization=0, margin=0.5):
    """Zeros of the levels of one truncated polynomial of the given degree.

    The square window is adaptive: it has half-width equal to the Fujiwara
    bound on the level-0 root moduli plus ``margin``, so every level-0 zero
    lies inside it.  Returns (dict level -> ZeroSet, window).
    """
    levels = [int(m) for m in levels]
    coeffs = sample_coefficients(int(degree), seed, realization)
    smp = FieldSample(coeffs, max(levels) + 1, polynomial=True)
    window = square_window(polynomial_root_bound(coeffs) + margin)
    return {m: find_zeros(m, smp, window) for m in levels}, window


def default_bins():
    """Disk [0, 0.05) followed by geometric annuli up to r = 8 (24 bins)."""
    return np.concatenate([[0.0], np.geomspace(0.05, 8.0, 24)])


@dataclass
class PairCorrelationEstimate:
    levels: tuple
    edges: np.ndarray
    counts: np.ndarray
    g: np.ndarray
    stderr: np.ndarray
    window: tuple
    realizations: int
    excluded: int = 0

    def rows(self):
        for lo, hi, c, g, s in zip(self.edges[:-1], self.edges[1:], self.counts, self.g, self.stderr):
            yield float(lo), float(hi), int(c), float(g), float(s)


def pair_correlations(n, ks, realizations, window, bins=None, seed=0, erosion="max"):
    """Empirical g_{n,n+k} for several k from the same realizations.

    Level-n zeros are taken in an inner window and level n+k zeros in the
    full window; intensities in the normalization are the exact one-point
    values.  With ``erosion="max"`` the inner window is the window eroded
    by the largest bin edge.  With ``erosion="bin"`` each annulus uses the
    window eroded by its own outer radius, which is still unbiased and
    uses far more pairs in the short-range bins.
    """
    edges = default_bins() if bins is None else np.asarray(bins, dtype=float)
    if np.any(np.diff(edges) <= 0) or edges[0] < 0:
        raise ValueError("bins must be increasing and nonnegative")
    if erosion not in ("max", "bin"):
        raise ValueError("erosion must be 'max' or 'bin'")
    rmax = edges[-1]
    x0, x1, y0, y1 = window
    if 2 * rmax >= min(x1 - x0, y1 - y0):
        raise ValueError("largest bin must be smaller than the window half-width")
    outer = edges[1:] if erosion == "bin" else np.full(edges.size - 1, rmax)
    inner_area = (x1 - x0 - 2 * outer) * (y1 - y0 - 2 * outer)
    inner = (x0 + rmax, x1 - rmax, y0 + rmax, y1 - rmax)
    ks = list(ks)
    levels = sorted({n} | {n + k for k in ks})
    ann = np.pi * (edges[1:] ** 2 - edges[:-1] ** 2)
    per = {k: [] for k in ks}
    excluded = 0
    for smp in _samples(max(levels) + 1, window, seed, range(realizations)):
        # with a single erosion, level-n zeros are only needed in the inner window
        sets = {m: find_zeros(m, smp, inner if (m == n and erosion == "max") else window) for m in levels}
        if any(s.flagged for s in sets.values()):
            excluded += 1
            continue
        a = sets[n].zeros
        depth = np.minimum.reduce([a.real - x0, x1 - a.real, a.imag - y0, y1 - a.imag]) if a.size else a.real
        for k in ks:
            b = sets[n + k].zeros
            if a.size == 0 or b.size == 0:
                per[k].append(np.zeros(edges.size - 1))
                continue
            tb = cKDTree(np.column_stack([b.real, b.imag]))
            ta = cKDTree(np.column_stack([a.real, a.imag]))
            dm = ta.sparse_distance_matrix(tb, rmax, output_type="ndarray")
            d = dm["v"]
            # pairs at distance exactly zero are not stored by the tree; they
            # cannot occur between different levels almost surely
            idx = np.searchsorted(edges, d, side="right") - 1
            ok = (idx >= 0) & (idx < edges.size - 1)
            ok[ok] &= depth[dm["i"][ok]] >= outer[idx[ok]]
            per[k].append(np.bincount(idx[ok], minlength=edges.size - 1).astype(float))
    out = {}
    for k in ks:
        c = np.asarray(per[k])
        R = c.shape[0]
        denom = one_point_intensity(n) * one_point_intensity(n + k) * inner_area * ann
        g_r = c / denom
        g = g_r.mean(axis=0)
        se = g_r.std(axis=0, ddof=1) / math.sqrt(R) if R > 1 else np.full(g.size, np.inf)
        counts = c.sum(axis=0).astype(int)
        se = np.where(counts == 0, np.inf, se)
        out[k] = PairCorrelationEstimate(
            levels=(n, n + k),
            edges=edges,
            counts=counts,
            g=g,
            stderr=se,
            window=tuple(window),
            realizations=R,
            excluded=excluded,
        )
    return out


def pair_correlation_empirical(n, k, realizations, window, bins=None, seed=0, erosion="max"):
    return pair_correlations(n, [k], realizations, window, bins=bins, seed=seed, erosion=erosion)[k]

"""Command line interface.

Every command writes a delimited data file (CSV or JSON) plus a JSON
sidecar holding the full configuration, so any output can be re-run.
Without ``--out`` the data go to standard output and no sidecar is written.
``--plot`` additionally renders a PNG next to the data file.

Exit status: 0 on success, 1 on usage errors, 2 on numerical failures.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import averages, kacrice, plotting, spectrogram, zeros
from .errors import NumericalError
from .fields import coefficient_batch, sample_coefficients, FieldSample, walker_size
from .io import ExperimentConfig, format_value, write_csv, write_json, write_sidecar
from .specfun import truncation_level

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


class Result:
    """Tabular output of one command plus optional summary and figure."""

    def __init__(self, header, rows, summary=None, figure=None, gnuplot=None):
        self.header = list(header)
        self.rows = [list(r) for r in rows]
        self.summary = summary or {}
        self.figure = figure  # callable(path) rendering a PNG
        self.gnuplot = gnuplot  # callable(csv_path, png_path) -> script text


# ---------------------------------------------------------------- helpers


def _window(args):
    if args.window_box is not None:
        return tuple(args.window_box)
    return zeros.square_window(args.window)


def _parse_complex(text):
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from exc


def _bins(text):
    try:
        edges = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError("bins must be comma separated numbers") from exc
    if len(edges) < 2:
        raise argparse.ArgumentTypeError("need at least two bin edges")
    return edges


def resolve_workers(value):
    """Worker count: flag, then POLYZERO_WORKERS, then available CPUs."""
    if value is not None:
        return max(1, int(value))
    env = os.environ.get("POLYZERO_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"POLYZERO_WORKERS must be an integer, got {env!r}")
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


# ---------------------------------------------------------------- zeros


def cmd_zeros_find(args):
    window = _window(args)
    x0, x1, y0, y1 = window
    R = math.hypot(max(abs(x0), abs(x1)), max(abs(y0), abs(y1))) + 1.0
    K = args.truncation if args.truncation is not None else truncation_level(args.n + 1, R)
    smp = FieldSample(sample_coefficients(K, args.seed, args.realization), args.n + 1)
    zs = zeros.find_zeros(args.n, smp, window)
    rows = [(z.real, z.imag, int(s), r) for z, s, r in zip(zs.zeros, zs.jacobian_sign, zs.residual)]
    summary = {"count": len(zs), "flagged": zs.flagged, "truncation": K, "window": window}
    fig = lambda p: plotting.plot_zero_sets({f"level {args.n}": zs.zeros}, p)  # noqa: E731
    return Result(["re", "im", "jacobian_sign", "residual"], rows, summary, fig)


def cmd_zeros_intensity(args):
    window = _window(args)
    est = zeros.intensity_estimate(args.n, args.realizations, window, args.seed)
    pred = zeros.one_point_intensity(args.n)
    row = (args.n, est["intensity"], est["stderr"], pred, est["realizations"], est["excluded"])
    return Result(["n", "intensity", "stderr", "predicted", "realizations", "excluded"], [row], dict(est, predicted=pred))


def cmd_zeros_paircorr(args):
    window = _window(args)
    ks = args.k or [1]
    res = zeros.pair_correlations(args.n, ks, args.realizations, window, bins=args.bins, seed=args.seed,
                                  erosion=args.erosion)
    rows = [(args.n, k, *r) for k in ks for r in res[k].rows()]
    summary = {"realizations": res[ks[0]].realizations, "excluded": res[ks[0]].excluded}

    def fig(p):
        curves = {f"g({args.n},{args.n + k})": (res[k].g, res[k].stderr) for k in ks}
        return plotting.plot_curves(res[ks[0]].edges, curves, p)

    return Result(["n", "k", "r_lo", "r_hi", "pair_count", "g", "stderr"], rows, summary, fig)


# ---------------------------------------------------------------- kacrice


def cmd_kacrice_g(args):
    n, k = args.n, args.k
    norm = kacrice.one_point_exact(n) * kacrice.one_point_exact(n + k)
    if args.exact:
        g = kacrice.g_contact_exact(n, k)
        out = {"value": float(g), "stderr": 0.0, "method": "exact", "rational": str(g)}
    elif args.contact:
        val, se = kacrice.rho2_from_assembly(kacrice.contact_assembly(n, k), args.samples, args.seed)
        s = math.pi**2 / float(norm)
        out = {"value": val * s, "stderr": se * s, "method": "contact-mc"}
    else:
        val, se = kacrice.g_normalized(n, k, 0j, complex(args.sep), args.samples, args.seed)
        out = {"value": val, "stderr": se, "method": "mc", "separation": args.sep}
    out.update(n=n, k=k)
    return Result(list(out), [list(out.values())], out)


def cmd_kacrice_table(args):
    rows = [(n, k, f"{a}/{b}" if b != 1 else str(a), v) for n, k, a, b, v in kacrice.g_table(args.nmax, args.kmax)]
    return Result(["n", "k", "g_exact", "g_decimal"], rows)


# ---------------------------------------------------------------- averages


def cmd_avg_lln(args):
    xs = averages.lattice(args.half, args.spacing)
    pts = xs[None, :] + 1j * xs[:, None]
    mask = np.abs(pts) <= args.half + 1e-12
    L = walker_size(args.N - 1, pts, args.spacing)
    rows = []
    for r in range(args.realizations):
        coeffs = coefficient_batch(L, args.seed, [r])
        vals, _ = averages.average_fields(args.N, xs, xs, coeffs, L=L)
        dev = np.abs(vals[0] - 1.0)[mask]
        rows.append((r, float(dev.max()), float(vals[0][mask].mean())))
    sup = np.array([row[1] for row in rows])
    summary = {"truncation": L, "below_threshold": int((sup < args.threshold).sum()), "threshold": args.threshold}
    return Result(["realization", "sup_deviation", "grid_mean"], rows, summary)


def cmd_avg_clt_cov(args):
    rs = args.r
    rows = []
    for r in rs:
        exact = averages.cov_GN_exact(args.N, r)
        kap = averages.kappa(r)
        if args.mode == "exact":
            rows.append((args.N, r, exact, float("nan"), kap))
        else:
            est = averages.cov_GN_empirical(args.N, 0.0, r, args.realizations, args.seed)
            rows.append((args.N, r, est["cov"], est["stderr"], exact))
    header = ["N", "r", "cov", "stderr", "kappa" if args.mode == "exact" else "cov_exact"]
    return Result(header, rows, {"mode": args.mode})


def cmd_avg_mnz(args):
    law = averages.mnz_law(args.n, args.z)
    rows = [(int(m), p) for m, p in zip(law.support, law.pmf) if p > 0]
    summary = {"mean": law.mean, "variance": law.variance, "mean_exact": args.n + abs(args.z) ** 2,
               "variance_exact": (2 * args.n + 1) * abs(args.z) ** 2}
    return Result(["m", "pmf"], rows, summary)


def cmd_avg_kappa(args):
    return Result(["r", "kappa"], [(r, averages.kappa(r)) for r in args.r])


# ---------------------------------------------------------------- spectrogram


def _grid_result(xs, xis, values, title):
    X, Y = np.meshgrid(xs, xis)
    rows = zip(X.ravel(), Y.ravel(), values.ravel())
    fig = lambda p: plotting.plot_grid(xs, xis, values, p, title=title)  # noqa: E731
    gp = lambda c, p: plotting.gnuplot_grid_script(c, p, title=title)  # noqa: E731
    return Result(["x", "xi", "value"], rows, figure=fig, gnuplot=gp)


def _tf_lattice(args):
    return np.arange(-args.extent, args.extent + 1e-12, args.step)


def cmd_spec_wn(args):
    xs = _tf_lattice(args)
    sp = spectrogram.wn_spectrogram(args.n, dt=args.dt, T=args.T, xs=xs, xis=xs, seed=args.seed,
                                    realization=args.realization)
    res = _grid_result(sp.xs, sp.xis, sp.values, f"white noise spectrogram, h_{args.n}")
    res.summary = {"mean": float(sp.values.mean())}
    return res


def cmd_spec_multitaper(args):
    xs = _tf_lattice(args)
    mt = spectrogram.multitaper_average(args.scheme, args.N, dt=args.dt, T=args.T, xs=xs, xis=xs, seed=args.seed)
    res = _grid_result(mt.xs, mt.xis, mt.values, f"multitaper average, {args.scheme} N={args.N}")
    res.summary = {"levels": mt.levels, "sup_deviation": mt.sup_deviation()}
    return res


# ---------------------------------------------------------------- reference tables


def cmd_table_correlations(args):
    return cmd_kacrice_table(args)


def cmd_table_figure1(args):
    sets, window = zeros.polynomial_zero_sets(args.degree, args.seed, range(4))
    rows = [(k, z.real, z.imag, int(s)) for k, zs in sets.items() for z, s in zip(zs.zeros, zs.jacobian_sign)]
    summary = {"counts": {k: len(zs) for k, zs in sets.items()}, "window": window,
               "flagged": {k: zs.flagged for k, zs in sets.items()}}
    fig = lambda p: plotting.plot_zero_sets({f"k={k}": zs.zeros for k, zs in sets.items()}, p,  # noqa: E731
                                            title=f"degree {args.degree}, seed {args.seed}")
    return Result(["k", "re", "im", "jacobian_sign"], rows, summary, fig)


# ---------------------------------------------------------------- parser


def _common(p):
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed (default 0)")
    p.add_argument("--workers", type=int, default=argparse.SUPPRESS, help="worker count (env POLYZERO_WORKERS)")
    p.add_argument("--out", default=argparse.SUPPRESS, help="output file; a .meta.json sidecar is written beside it")
    p.add_argument("--format", choices=["csv", "json"], default=argparse.SUPPRESS)
    p.add_argument("--plot", action="store_true", default=argparse.SUPPRESS, help="also render a PNG next to --out")


def _window_args(p, default):
    p.add_argument("--window", type=float, default=default, help="half-width of the square window")
    p.add_argument("--window-box", type=float, nargs=4, metavar=("X0", "X1", "Y0", "Y1"), default=None)


def build_parser():
    parser = _Parser(prog="polyzero", description="Gaussian Landau-level fields, their zeros and averages")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--out", default=None)
    parser.add_argument("--format", choices=["csv", "json"], default="csv")
    parser.add_argument("--plot", action="store_true")
    top = parser.add_subparsers(dest="group", required=True, parser_class=_Parser)

    def leaf(sub, name, fn, help_text):
        p = sub.add_parser(name, help=help_text)
        _common(p)
        p.set_defaults(func=fn)
        return p

    g = top.add_parser("zeros", help="zero sets of sampled fields")
    sub = g.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    p = leaf(sub, "find", cmd_zeros_find, "zeros of one realization")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--truncation", type=int, default=None, help="number of coefficients K (default automatic)")
    p.add_argument("--realization", type=int, default=0)
    _window_args(p, 6.0)
    p = leaf(sub, "intensity", cmd_zeros_intensity, "mean zero intensity")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--realizations", type=int, default=200)
    _window_args(p, 6.0)
    p = leaf(sub, "paircorr", cmd_zeros_paircorr, "empirical cross-correlations g(n, n+k)")
    p.add_argument("--n", type=int, default=0)
    p.add_argument("--k", type=int, action="append", help="level offset (repeatable)")
    p.add_argument("--bins", type=_bins, default=None, help="comma separated bin edges")
    p.add_argument("--realizations", type=int, default=500)
    p.add_argument("--erosion", choices=["max", "bin"], default="bin")
    p.add_argument("--truncation", type=int, default=None, help="accepted for symmetry; chosen automatically")
    _window_args(p, 9.0)

    g = top.add_parser("kacrice", help="Kac-Rice two-point correlations")
    sub = g.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    p = leaf(sub, "g", cmd_kacrice_g, "normalized correlation g(n, n+k)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--sep", type=float)
    mode.add_argument("--contact", action="store_true")
    mode.add_argument("--exact", action="store_true")
    p.add_argument("--samples", type=int, default=kacrice.DEFAULT_SAMPLES)
    p = leaf(sub, "table", cmd_kacrice_table, "exact contact correlations")
    p.add_argument("--nmax", type=int, default=10)
    p.add_argument("--kmax", type=int, default=5)

    g = top.add_parser("avg", help="averages over Landau levels")
    sub = g.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    p = leaf(sub, "lln", cmd_avg_lln, "sup |S_N - 1| on a disk lattice")
    p.add_argument("--N", type=int, default=2000)
    p.add_argument("--realizations", type=int, default=20)
    p.add_argument("--half", type=float, default=2.0)
    p.add_argument("--spacing", type=float, default=0.1)
    p.add_argument("--threshold", type=float, default=0.15)
    p = leaf(sub, "clt-cov", cmd_avg_clt_cov, "covariance of the fluctuation field")
    p.add_argument("--N", type=int, default=1600)
    p.add_argument("--r", type=float, action="append", required=True)
    p.add_argument("--mode", choices=["exact", "empirical"], default="exact")
    p.add_argument("--realizations", type=int, default=2000)
    p = leaf(sub, "mnz", cmd_avg_mnz, "law of M_{n,z}")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--z", type=_parse_complex, required=True)
    p = leaf(sub, "kappa", cmd_avg_kappa, "limit covariance kappa(r)")
    p.add_argument("--r", type=float, action="append", required=True)

    g = top.add_parser("spec", help="white-noise spectrograms")
    sub = g.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    for name, fn in (("wn", cmd_spec_wn), ("multitaper", cmd_spec_multitaper)):
        p = leaf(sub, name, fn, f"{name} spectrogram grid")
        p.add_argument("--dt", type=float, default=spectrogram.DEFAULT_DT)
        p.add_argument("--T", type=float, default=spectrogram.DEFAULT_T)
        p.add_argument("--extent", type=float, default=4.0)
        p.add_argument("--step", type=float, default=spectrogram.DEFAULT_STEP)
        if name == "wn":
            p.add_argument("--n", type=int, required=True)
            p.add_argument("--realization", type=int, default=0)
        else:
            p.add_argument("--scheme", choices=["uniform", "paired4k"], default="uniform")
            p.add_argument("--N", type=int, required=True)

    g = top.add_parser("paper-table", help="regenerate reference tables and figures")
    sub = g.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    p = leaf(sub, "correlations", cmd_table_correlations, "exact g table, n <= 10, k <= 5")
    p.set_defaults(nmax=10, kmax=5)
    p = leaf(sub, "figure1", cmd_table_figure1, "zero sets of a truncated polynomial, levels 0..3")
    p.add_argument("--degree", type=int, default=30)
    return parser


_GLOBAL = {"seed": 0, "workers": None, "out": None, "format": "csv", "plot": False}
_INTERNAL = {"func", "group", "cmd"} | set(_GLOBAL)


def config_from_args(args):
    params = {k: v for k, v in vars(args).items() if k not in _INTERNAL}
    return ExperimentConfig(subcommand=f"{args.group} {args.cmd}", params=params, seed=args.seed, out=args.out,
                            format=args.format)


def _emit(result, args, config):
    if args.format == "json":
        payload = {"columns": result.header, "rows": result.rows, "summary": result.summary}
        if args.out:
            write_json(args.out, payload)
        else:
            json.dump(json.loads(json.dumps(payload, default=_json_default)), sys.stdout, indent=2)
            sys.stdout.write("\n")
    elif args.out:
        write_csv(args.out, result.header, result.rows)
    else:
        sys.stdout.write(",".join(result.header) + "\n")
        for row in result.rows:
            sys.stdout.write(",".join(format_value(v) for v in row) + "\n")
    if not args.out:
        return
    write_sidecar(args.out, config, result.summary)
    out = Path(args.out)
    if result.gnuplot is not None and args.format == "csv":
        out.with_suffix(".gp").write_text(result.gnuplot(out.name, out.with_suffix(".png").name), encoding="utf-8")
    if args.plot and result.figure is not None:
        result.figure(out.with_suffix(".png"))


def _json_default(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, complex):
        return [x.real, x.imag]
    return str(x)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        for key, val in _GLOBAL.items():
            if not hasattr(args, key):
                setattr(args, key, val)
        args.workers = resolve_workers(args.workers)
        if args.plot and not args.out:
            raise UsageError("--plot needs --out")
        config = config_from_args(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    try:
        result = args.func(args)
        _emit(result, args, config)
    except NumericalError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, argparse.ArgumentTypeError) as exc:
        print(f"polyzero: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

Exit codes: 0 success, 2 usage or input error, 3 numerical failure,
4 infeasible or timed out.
"""

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__, experiments, separable
from .datagen import SynthConfig, generate, rank_deficient_fixture, write_dataset
from .fpi import GfpiError, GfpiParams, bfpi, gfpi
from .io import read_json, read_matrix, to_jsonable, write_json, write_matrix
from .metrics import estimate_h, evaluate
from .mip import LPNumericalError, MipSolveError
from .polytope import EmptyPolytopeError, UnboundedError

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_INFEASIBLE = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _float(text):
    """Float parser that accepts 'inf'."""
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _out_dir(path):
    d = Path(path)
    try:
        d.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {d}: {exc}") from exc
    return d


def _read(path, name="input"):
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{name} file not found: {p}")
    try:
        return read_matrix(p)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _add_gfpi_options(p, default_time):
    p.add_argument("--preset", help="parameter preset by SNR, e.g. snr40 or snrinf")
    p.add_argument("--t-facets", type=int, help="number of facets to extract (default r)")
    p.add_argument("--dim", type=int, help="data rank d (estimated when omitted)")
    p.add_argument("--gamma", type=_float)
    p.add_argument("--eta", type=_float)
    p.add_argument("--lam", type=_float)
    p.add_argument("--big-m", type=_float)
    p.add_argument("--epsilon", type=_float)
    p.add_argument("--time-limit", type=_float, default=default_time,
                   help=f"seconds per facet MIP (default {default_time:g})")
    p.add_argument("--node-limit", type=int)
    p.add_argument("--backend", default="builtin")
    p.add_argument("--anchor-mode", choices=("mean", "snpa_mean"), default="mean")
    p.add_argument("--auto-t", action="store_true", help="choose the number of facets heuristically")
    p.add_argument("--inlier-passes", type=int, default=0,
                   help="re-project using facet members only, this many times (outlier-heavy data)")


def _gfpi_params(args, r):
    overrides = {"time_limit": args.time_limit, "node_limit": args.node_limit,
                 "backend": args.backend, "anchor_mode": args.anchor_mode, "auto_t": args.auto_t,
                 "inlier_passes": args.inlier_passes, "dim": args.dim}
    for name in ("gamma", "eta", "lam", "big_m", "epsilon"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    t = args.t_facets if args.t_facets is not None else r
    if t is None:
        raise UsageError("give --t-facets or --r")
    if args.preset:
        try:
            snr = experiments.parse_preset(args.preset)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        return GfpiParams.from_snr(snr, t, **overrides)
    return GfpiParams(t_facets=t, **overrides)


def _finish_factor(args, x, w, report, out):
    write_matrix(out / "W.csv", w)
    if args.estimate_h:
        h = estimate_h(x, w)
        write_matrix(out / "H.csv", h)
        report["h_file"] = "H.csv"
    report["w"] = w
    report["w_file"] = "W.csv"
    write_json(out / "result.json", report)
    brief = {k: v for k, v in report.items() if k not in ("facets", "w", "polytope", "params")}
    print(json.dumps(to_jsonable(brief), indent=2))


def cmd_datagen(args):
    out = _out_dir(args.out)
    if args.fixture == "rank-deficient":
        gt = rank_deficient_fixture(purity=args.purity, noise_sigma=args.noise_sigma, n=args.n,
                                    seed=args.seed)
    else:
        cfg = SynthConfig(r=args.r, m=args.m if args.m is not None else args.r, n1=args.n1,
                          n2=args.n2, purity=args.purity, snr=args.snr, outliers=args.outliers,
                          seed=args.seed, cond_cap=args.cond_cap)
        gt = generate(cfg)
    write_dataset(gt, out)
    print(f"wrote {gt.x.shape[0]}x{gt.x.shape[1]} dataset to {out}")
    return EXIT_OK


def cmd_gfpi(args):
    x = _read(args.input)
    params = _gfpi_params(args, args.r)
    out = _out_dir(args.out)
    fp = gfpi(x, params)
    report = dict(fp.to_dict()["meta"])
    _finish_factor(args, x, fp.w, report, out)
    return EXIT_OK


def cmd_bfpi(args):
    x = _read(args.input)
    out = _out_dir(args.out)
    fp = bfpi(x, args.s, d=args.dim)
    _finish_factor(args, x, fp.w, dict(fp.meta), out)
    return EXIT_OK


def cmd_separable(args):
    x = _read(args.input)
    out = _out_dir(args.out)
    res = getattr(separable, args.command)(x, args.r)
    report = {"algorithm": args.command, "indices": res.indices,
              "residual_norms": res.residual_norms}
    _finish_factor(args, x, res.w, report, out)
    return EXIT_OK


def cmd_eval(args):
    w_true = _read(args.w_true, "W_true")
    w_est = _read(args.w_est, "W_est")
    x = _read(args.x, "X") if args.x else None
    h = _read(args.h, "H") if args.h else None
    if (x is None) != (h is None):
        raise UsageError("--x and --h must be given together")
    report = evaluate(w_true, w_est, x=x, h=h)
    if args.out:
        write_json(args.out, report)
    print(json.dumps(to_jsonable(report), indent=2))
    return EXIT_OK


def cmd_sweep(args):
    try:
        spec = read_json(args.spec)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read sweep spec {args.spec}: {exc}") from exc
    rows = experiments.sweep(spec, args.out, workers=args.workers)
    failed = sum(r["status"] != "ok" for r in rows)
    print(f"wrote {len(rows)} rows to {args.out} ({failed} not ok)")
    return EXIT_OK


def cmd_unmix_cube(args):
    cube = _read(args.cube, "cube")
    params = _gfpi_params(args, args.r)
    out = _out_dir(args.out)
    res = experiments.unmix_cube(cube, args.width, args.height, args.r, params)
    write_matrix(out / "W.csv", res.w)
    for k, grid in enumerate(res.abundance_maps):
        write_matrix(out / f"abundance_{k}.csv", grid)
    write_json(out / "result.json", {**res.meta, "width": args.width, "height": args.height,
                                     "n_endmembers": res.w.shape[1]})
    print(f"wrote W.csv and {res.w.shape[1]} abundance maps to {out}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="polyfacet", description="Facet-based polytope identification for simplex-structured matrix factorization.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("datagen", help="generate a synthetic dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--fixture", choices=("synthetic", "rank-deficient"), default="synthetic")
    p.add_argument("--r", type=int, default=3)
    p.add_argument("--m", type=int, help="rows (default r)")
    p.add_argument("--n1", type=int, default=30, help="points per facet")
    p.add_argument("--n2", type=int, default=10, help="interior points")
    p.add_argument("--purity", type=_float, default=1.0)
    p.add_argument("--snr", type=_float, default=float("inf"), help="dB, 'inf' for noiseless")
    p.add_argument("--outliers", type=int, default=0)
    p.add_argument("--cond-cap", type=_float)
    p.add_argument("--noise-sigma", type=_float, default=0.01, help="rank-deficient fixture only")
    p.add_argument("--n", type=int, default=200, help="rank-deficient fixture only")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_datagen)

    p = sub.add_parser("gfpi", help="greedy facet-based polytope identification")
    p.add_argument("input", help="data matrix CSV (m x n)")
    p.add_argument("--out", required=True)
    p.add_argument("--r", type=int, help="number of endmembers (default T)")
    p.add_argument("--estimate-h", action="store_true", help="also write H.csv")
    _add_gfpi_options(p, 10.0)
    p.set_defaults(func=cmd_gfpi)

    p = sub.add_parser("bfpi", help="brute-force facet identification")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.add_argument("--s", type=int, required=True, help="minimum points per facet")
    p.add_argument("--dim", type=int)
    p.add_argument("--estimate-h", action="store_true")
    p.set_defaults(func=cmd_bfpi)

    for name in ("spa", "snpa"):
        p = sub.add_parser(name, help=f"{name.upper()} separable NMF baseline")
        p.add_argument("input")
        p.add_argument("--out", required=True)
        p.add_argument("--r", type=int, required=True)
        p.add_argument("--estimate-h", action="store_true")
        p.set_defaults(func=cmd_separable)

    p = sub.add_parser("eval", help="compare an estimate with the ground truth")
    p.add_argument("--w-true", required=True)
    p.add_argument("--w-est", required=True)
    p.add_argument("--x", help="data matrix, for RE")
    p.add_argument("--h", help="abundances, for RE")
    p.add_argument("--out", help="write the report JSON here as well")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="run a parameter sweep from a JSON spec")
    p.add_argument("spec")
    p.add_argument("--out", required=True, help="result CSV")
    p.add_argument("--workers", type=int, help=f"processes (default ${experiments.THREADS_ENV} or 1)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("unmix-cube", help="unmix a bands x pixels cube into abundance maps")
    p.add_argument("cube")
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--out", required=True)
    _add_gfpi_options(p, 100.0)
    p.set_defaults(func=cmd_unmix_cube)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GfpiError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE if exc.kind == "infeasible" else EXIT_NUMERICAL
    except (UnboundedError, EmptyPolytopeError, LPNumericalError, MipSolveError,
            np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

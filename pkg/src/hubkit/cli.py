"""Command-line interface: ``hubkit <subcommand> ...``.

Subcommands: synth, hubness, reduce, gicdm, evaluate, crossover, bench.
JSON reports go to stdout (or ``--out``) and embed the run configuration and
library version. All randomness derives from ``--seed``.
"""
from __future__ import annotations

import argparse
import csv
import io as _io
import json
import logging
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .crossover import crossover_dimension
from .density import knn_density
from .evaluation import BENCH_COLUMNS, BENCH_DIMS, bench_hypersphere, evaluate, expand_metric_names
from .gicdm import run_gicdm
from .hubness import hubness_report, k_occurrence
from .io import VectorSet, load_vectors, save_vectors
from .knn import DissimilarityView, knn_query
from .metrics import METRICS
from .reduction import icdm, mean_knn_distance, sphere_project
from .synth import KINDS, RNG_ALGORITHM, ScenarioSpec, generate

log = logging.getLogger("hubkit")


def report_schema(name: str) -> dict:
    """JSON schema for the ``name`` report (hubness, reduce, gicdm, metric, crossover, synth)."""
    text = resources.files("hubkit").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def _config(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    return json.loads(json.dumps(cfg, default=str))


def _envelope(args, **payload) -> dict:
    return {"command": args.command, "version": __version__, "config": _config(args), **payload}


def _emit_text(text: str, out) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _emit_json(obj, out) -> None:
    _emit_text(json.dumps(obj, indent=2) + "\n", out)


def _load(path, fmt):
    return load_vectors(path, fmt)


def _save_vector(values, path):
    save_vectors(VectorSet(np.asarray(values).reshape(-1, 1)), path, "binary")


def _parse_params(items):
    params = {}
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise ValueError(f"--param expects key=value, got {item!r}")
        try:
            params[key] = json.loads(val)
        except json.JSONDecodeError:
            params[key] = val
    return params


# -- subcommands -----------------------------------------------------------

def cmd_synth(args):
    spec = ScenarioSpec(args.kind, d=args.d, n=args.n, seed=args.seed,
                        params=_parse_params(args.param))
    vs = generate(spec, args.role)
    save_vectors(vs, args.out, args.format)
    if args.meta:
        _emit_json(_envelope(args, scenario=spec.metadata(), rng=RNG_ALGORITHM), args.meta)


def cmd_hubness(args):
    vs = _load(args.input, args.format)
    table = knn_query(DissimilarityView(vs), args.k)
    report = hubness_report(k_occurrence(table), args.q)
    _emit_json(_envelope(args, **report), args.out)


def cmd_reduce(args):
    vs = _load(args.input, args.format)
    if args.method == "sphere":
        out = sphere_project(vs)
        if args.out_vectors:
            save_vectors(out, args.out_vectors, "binary")
        norms = np.linalg.norm(out.data, axis=1)
        _emit_json(_envelope(args, method="sphere", n=vs.n, d=vs.d,
                             max_norm_error=float(np.abs(norms - 1).max())), args.out)
        return
    if args.method == "nicdm":
        mu = mean_knn_distance(DissimilarityView(vs), args.k)
        deltas = np.sqrt(mu.mean() / mu)
        trace = [float(np.abs(mu - mu.mean()).sum())]
        mu_bar = float(mu.mean())
    else:
        st = icdm(vs, args.k, args.iters)
        deltas, trace, mu_bar = st.deltas, [float(s) for s in st.disparity_trace], st.mu_bar_final
    if args.out_deltas:
        _save_vector(deltas, args.out_deltas)
    _emit_json(_envelope(args, method=args.method, n=vs.n, d=vs.d,
                         disparity_trace=trace, mu_bar_final=mu_bar), args.out)


def cmd_gicdm(args):
    real = _load(args.real, args.format)
    gen = _load(args.gen, args.format)
    res = run_gicdm(real, gen, args.k1, args.k2, args.q, args.iters)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _save_vector(res.real_state[res.K1].deltas, out_dir / "delta_real.bin")
    _save_vector(res.delta_g[res.K1], out_dir / "delta_gen.bin")
    (out_dir / "keep_mask.txt").write_text("".join(f"{int(v)}\n" for v in res.keep_mask))
    summary = _envelope(args, **res.summary())
    _emit_json(summary, out_dir / "summary.json")
    _emit_json(summary, args.out)


def cmd_evaluate(args):
    real = _load(args.real, args.format)
    gen = _load(args.gen, args.format)
    names = expand_metric_names(args.metrics.split(","))
    reports, res = evaluate(real, gen, names, args.k, correct=args.gicdm, K1=args.k1,
                            K2=args.k2, q=args.q, iters=args.iters, split_seed=args.seed)
    lines = []
    for rep in reports:
        lines.append(json.dumps(_envelope(args, **rep.to_dict()), sort_keys=False))
    _emit_text("\n".join(lines) + "\n", args.out)
    if args.density_profile:
        if res is not None:
            dr = res.real_state[res.K1].deltas
            view = DissimilarityView(real, base_scale=dr, query_scale=dr)
        else:
            view = DissimilarityView(real)
        est = knn_density(view, args.k1 or 2 * args.k)
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "log_density"])
        for i, v in enumerate(est.log_values):
            w.writerow([i, repr(float(v))])
        Path(args.density_profile).write_text(buf.getvalue())


def cmd_crossover(args):
    if args.curve:
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "k", "d_star", "residual"])
        for n in args.n:
            for k in range(args.kmin, args.kmax + 1, args.kstep):
                d_star, res = crossover_dimension(n, k, args.tol)
                w.writerow([n, k, repr(d_star), repr(res)])
        _emit_text(buf.getvalue(), args.out)
        return
    if len(args.n) != 1:
        raise ValueError("give a single --n without --curve")
    d_star, res = crossover_dimension(args.n[0], args.k, args.tol)
    _emit_json(_envelope(args, n=args.n[0], k=args.k, d_star=d_star, residual=res), args.out)


def cmd_bench(args):
    rows = bench_hypersphere(args.dims, args.n, args.seed, args.k, args.k1, args.k2, args.q,
                             args.iters, expand_metric_names(args.metrics.split(",")))
    buf = _io.StringIO()
    w = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({**r, "value": repr(r["value"])})
    _emit_text(buf.getvalue(), args.out)


# -- parser ----------------------------------------------------------------

def _add_gicdm_flags(p, required=False):
    p.add_argument("--k1", type=int, default=None, help="GICDM scale K1 (default 2k)")
    p.add_argument("--k2", type=int, default=None, help="GICDM scale K2 (default 10*K1)")
    p.add_argument("--q", type=float, default=0.95, help="filtering quantile")
    p.add_argument("--iters", type=int, default=10, help="ICDM iterations")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hubkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"hubkit {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    fmt = argparse.ArgumentParser(add_help=False)
    fmt.add_argument("--format", choices=["binary", "csv"], default=None,
                     help="vector file format (default: from suffix)")
    out = argparse.ArgumentParser(add_help=False)
    out.add_argument("--out", default=None, help="output path (default stdout)")

    p = sub.add_parser("synth", parents=[fmt], help="generate a synthetic scenario")
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--role", choices=["real", "generated"], default="real")
    p.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="scenario parameter, e.g. r1=1.0 (repeatable)")
    p.add_argument("--out", required=True)
    p.add_argument("--meta", default=None, help="write scenario metadata JSON here")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("hubness", parents=[fmt, out], help="k-occurrence hubness measures")
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--q", type=float, default=0.01)
    p.set_defaults(func=cmd_hubness)

    p = sub.add_parser("reduce", parents=[fmt, out], help="in-sample hubness reduction")
    p.add_argument("--input", required=True)
    p.add_argument("--method", choices=["nicdm", "icdm", "sphere"], default="icdm")
    p.add_argument("--k", type=int, default=20, help="neighborhood size K")
    p.add_argument("--iters", type=int, default=10)
    p.add_argument("--out-deltas", default=None, help="binary vector file for the factors")
    p.add_argument("--out-vectors", default=None, help="projected vectors (sphere)")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("gicdm", parents=[fmt, out], help="GICDM factors and keep mask")
    p.add_argument("--real", required=True)
    p.add_argument("--gen", required=True)
    p.add_argument("--k1", type=int, default=10)
    p.add_argument("--k2", type=int, default=None)
    p.add_argument("--q", type=float, default=0.95)
    p.add_argument("--iters", type=int, default=10)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_gicdm)

    p = sub.add_parser("evaluate", parents=[fmt, out], help="fidelity/coverage metrics")
    p.add_argument("--real", required=True)
    p.add_argument("--gen", required=True)
    p.add_argument("--metrics", default="precision,density,recall,coverage",
                   help=f"comma list of {', '.join(METRICS)}, sym, clipped, all")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--gicdm", action="store_true", help="apply GICDM correction")
    _add_gicdm_flags(p)
    p.add_argument("--seed", type=int, default=0, help="half-split seed for clipped metrics")
    p.add_argument("--density-profile", default=None,
                   help="write per-real-point log-densities (CSV) here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("crossover", parents=[out], help="crossover dimension d*(n, k)")
    p.add_argument("--n", type=int, nargs="+", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--tol", type=float, default=0.01)
    p.add_argument("--curve", action="store_true", help="CSV of d* over k in [kmin, kmax]")
    p.add_argument("--kmin", type=int, default=1)
    p.add_argument("--kmax", type=int, default=50)
    p.add_argument("--kstep", type=int, default=1)
    p.set_defaults(func=cmd_crossover)

    p = sub.add_parser("bench", parents=[out], help="hypersphere sweep (CSV)")
    p.add_argument("--dims", type=int, nargs="+", default=list(BENCH_DIMS))
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=5)
    _add_gicdm_flags(p)
    p.add_argument("--metrics", default="all")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        args.func(args)
    except (ValueError, ArithmeticError, OSError) as exc:
        print(f"hubkit {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

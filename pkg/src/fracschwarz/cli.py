"""Command-line interface.

Subcommands
-----------
assemble
    Assemble an operator symbol and write the binary cache.
solve
    Run one experiment from a JSON config; print the result row as JSON.
bench
    Reproduce an iteration-count table as CSV.
cond
    Estimate extreme eigenvalues of the preconditioned operator.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure,
4 iteration cap exceeded.
"""

import argparse
import json
import sys

from .bench import (ExperimentSpec, parse_measure, read_grid_file,
                    run_experiment, run_table)
from .errors import ConfigError, NumericalError
from .krylov import estimate_condition
from .mesh import build_decomposition, build_mesh, coarse_prolongation
from .operators import save_symbol_cache
from .assembly import build_operator
from .schwarz import build_preconditioner

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_MAXITER = 4


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="fracschwarz",
        description="Schwarz-preconditioned CG solver for space-fractional "
                    "diffusion on the square")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("assemble", help="assemble a symbol cache")
    p.add_argument("--n", type=int, required=True, help="fine cells per axis")
    p.add_argument("--alpha", type=float, required=True, help="order in (1/2, 1)")
    p.add_argument("--c", type=float, default=0.0, help="reaction coefficient")
    p.add_argument("--measure", required=True, help="axes4 or uniform:L")
    p.add_argument("--drop-tol", type=float, default=1e-12)
    p.add_argument("--out", required=True, help="cache file to write")

    p = sub.add_parser("solve", help="run one experiment from a config file")
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--cache", default=None, help="symbol cache to reuse")
    p.add_argument("--out", default=None, help="write the result row JSON here")

    p = sub.add_parser("bench", help="reproduce an iteration-count table")
    p.add_argument("--table", type=int, choices=(1, 2), required=True)
    p.add_argument("--grid", default=None, help="JSON list of {n, m, overlap_cells}")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True, help="CSV file to write")

    p = sub.add_parser("cond", help="estimate the preconditioned condition number")
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--probes", type=int, default=None)
    return parser


def _load_spec(path, cache=None):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    spec = ExperimentSpec.from_json(doc)
    if cache:
        spec = ExperimentSpec.from_json({**doc, "cache": cache})
    return spec


def _cmd_assemble(args):
    mesh = build_mesh([[0.0, 2.0], [0.0, 2.0]], args.n)
    measure = parse_measure(args.measure)
    op = build_operator(mesh, args.alpha, args.c, measure, drop_tol=args.drop_tol)
    save_symbol_cache(op, args.out)
    print(json.dumps({"n": op.n, "alpha": op.alpha, "c": op.c,
                      "directions": len(op.measure), "out": args.out}))
    return EXIT_OK


def _cmd_solve(args):
    spec = _load_spec(args.config, cache=args.cache)
    row = run_experiment(spec)
    doc = {"h": row.h, "H": row.H, "delta": row.delta, "iters": row.iters,
           "cond_est": row.cond_est, "l2_error": row.l2_error,
           "seconds": row.seconds, "converged": row.converged}
    text = json.dumps(doc)
    print(text)
    out = args.out or spec.out
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    return EXIT_OK if row.converged else EXIT_MAXITER


def _cmd_bench(args):
    rows = read_grid_file(args.grid) if args.grid else None
    results, spread = run_table(args.table, rows=rows, out=args.out,
                                jobs=args.jobs)
    print(f"wrote {len(results)} rows to {args.out}; "
          f"iteration spread (max-min): {spread}")
    if any(not r.converged for r in results):
        return EXIT_MAXITER
    return EXIT_OK


def _cmd_cond(args):
    spec = _load_spec(args.config)
    mesh = build_mesh(spec.bounds, spec.n)
    measure = parse_measure(spec.measure)
    op = build_operator(mesh, spec.alpha, spec.c, measure)
    decomp = build_decomposition(mesh, spec.m, spec.overlap_cells)
    pre = build_preconditioner(op, decomp, coarse_prolongation(mesh, spec.m))
    probes = args.probes if args.probes is not None else spec.probes
    lam_min, lam_max, cond = estimate_condition(op, pre, probes=probes)
    print(json.dumps({"lambda_min": lam_min, "lambda_max": lam_max,
                      "cond": cond, "probes": probes,
                      "measure": spec.measure}))
    return EXIT_OK


def main(argv=None):
    args = _build_parser().parse_args(argv)
    handlers = {"assemble": _cmd_assemble, "solve": _cmd_solve,
                "bench": _cmd_bench, "cond": _cmd_cond}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

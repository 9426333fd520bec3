"""``qubosmith`` command line: generate, solve, bench, export, gset-to-qubo, report.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

import argparse
import datetime as _dt
import json
import logging
import os
import sys

from . import core, generators
from .errors import CapacityError, ConfigError, ContractError, ParseError, QuboError

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v > 0 or v == float("inf"):
        raise argparse.ArgumentTypeError(f"must be a positive finite number, got {text}")
    return v


def _emit(obj):
    json.dump(obj, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


# -- generate ---------------------------------------------------------------


def cmd_generate(args):
    spec = generators.GeneratorSpec(args.n, args.sigma, args.seed)
    Q = generators.random_qubo(spec)
    out = args.out or f"{spec.instance_id}.qubo"
    core.write_qubo(Q, out)
    entries = Q.slot_count
    density = Q.density if Q.n >= 2 else 1.0
    _emit({"instance_id": spec.instance_id, "n": Q.n, "entries": entries, "density": density, "path": out})
    return EXIT_OK


# -- solve ------------------------------------------------------------------

_SOLVER_FLAGS = {
    "reads": "reads",
    "sweeps": "sweeps",
    "seed": "seed",
    "t_hot": "t_hot",
    "t_cold": "t_cold",
    "tenure": "tenure",
    "timeout_ms": "timeout_ms",
    "stagnation_limit": "stagnation_limit",
    "replicas": "num_replicas",
    "iterations": "num_iterations",
}


def _solver_config(args, decomposed):
    from .solvers import SolverConfig

    opts = {key: getattr(args, flag) for flag, key in _SOLVER_FLAGS.items() if getattr(args, flag) is not None}
    if decomposed:
        opts.setdefault("reads", 50)
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects key=value, got {item!r}")
        opts[key] = json.loads(value) if value[:1] in "[{" else _scalar(value)
    return SolverConfig.from_dict(opts)


def _scalar(text):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    if text in ("none", "None", "null"):
        return None
    return text


def cmd_solve(args):
    from .harness import resolve_solver
    from .solvers import DECOMPOSITION_PREFIX, is_known

    if not is_known(args.solver):
        raise UsageError(f"unknown solver id {args.solver!r}")
    decomposed = args.solver.startswith(DECOMPOSITION_PREFIX)
    cfg = _solver_config(args, decomposed)
    dec = {}
    if decomposed:
        for flag in ("sub_size", "stall_limit", "selection"):
            if getattr(args, flag) is not None:
                dec[flag] = getattr(args, flag)
    elif args.sub_size is not None:
        raise UsageError("--sub-size only applies to qbsolv-like:<inner> solvers")
    Q = core.read_qubo(args.input)
    run = resolve_solver(args.solver, cfg, **dec)
    result = run(Q)
    out = result.to_dict()
    out["n"] = Q.n
    out["config"] = cfg.to_dict()
    out["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    _emit(out)
    return EXIT_OK


# -- bench / report ------------------------------------------------------------


def cmd_bench(args):
    from .bench import load_config, run_bench

    cfg = load_config(args.config, output_dir=args.output_dir)
    if args.no_plots:
        cfg.plots = False
    summary = run_bench(cfg, log=lambda msg: print(msg, file=sys.stderr))
    _emit(summary)
    return EXIT_OK


def cmd_report(args):
    from .harness import aggregate_and_emit, read_records_csv

    path = os.path.join(args.run_dir, "records.csv")
    if not os.path.exists(path):
        raise UsageError(f"no records.csv in {args.run_dir}")
    records = read_records_csv(path)
    agg = aggregate_and_emit(records, args.run_dir, plots=not args.no_plots)
    _emit({"run_dir": args.run_dir, "groups": len(agg["groups"]), "ratio_path_only": agg["ratio_path_only"]})
    return EXIT_OK


# -- export / import -------------------------------------------------------------


def cmd_export(args):
    from .core import energy
    from .export import read_solution, to_lp
    from .harness import relative_accuracy, uses_fallback

    Q = core.read_qubo(args.input)
    if args.import_solution:
        with open(args.import_solution, encoding="utf-8") as fh:
            bits = read_solution(fh.read(), Q.n)
        e = energy(Q, bits)
        out = {"n": Q.n, "energy": e}
        if args.best is not None:
            out["relative_accuracy"] = relative_accuracy(e, args.best)
            out["fallback_score"] = uses_fallback(args.best)
        _emit(out)
        return EXIT_OK
    if not args.out:
        raise UsageError("export needs --out (or --import-solution)")
    if args.format == "native":
        core.write_qubo(Q, args.out)
    else:
        with open(args.out, "w", encoding="ascii", newline="\n") as fh:
            fh.write(to_lp(Q))
    _emit({"format": args.format, "path": args.out, "n": Q.n})
    return EXIT_OK


def cmd_gset_to_qubo(args):
    g = generators.read_gset(args.input)
    Q = generators.maxcut_to_qubo(g)
    core.write_qubo(Q, args.out)
    _emit(
        {
            "nodes": g.num_nodes,
            "edges": g.num_edges,
            "density": generators.density(g.num_nodes, g.num_edges) if g.num_nodes >= 2 else 0.0,
            "density_percent": generators.density_percent(g.num_nodes, g.num_edges) if g.num_nodes >= 2 else None,
            "path": args.out,
        }
    )
    return EXIT_OK


# -- parser -----------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="qubosmith", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a dense Gaussian QUBO instance")
    g.add_argument("--n", type=_positive_int, required=True)
    g.add_argument("--sigma", type=_positive_float, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", help="output path (default: <instance_id>.qubo)")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve an instance and print the result as JSON")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--solver", required=True, help="bf | sa | sd | ts | pticm | qbsolv-like:<inner>")
    s.add_argument("--reads", type=_positive_int)
    s.add_argument("--sweeps", type=_positive_int)
    s.add_argument("--seed", type=int)
    s.add_argument("--t-hot", dest="t_hot", type=_positive_float)
    s.add_argument("--t-cold", dest="t_cold", type=_positive_float)
    s.add_argument("--tenure", type=int)
    s.add_argument("--timeout-ms", dest="timeout_ms", type=float)
    s.add_argument("--stagnation-limit", dest="stagnation_limit", type=_positive_int)
    s.add_argument("--replicas", type=_positive_int)
    s.add_argument("--iterations", type=_positive_int)
    s.add_argument("--sub-size", dest="sub_size", type=_positive_int)
    s.add_argument("--stall-limit", dest="stall_limit", type=_positive_int)
    s.add_argument("--selection", choices=("impact", "random"))
    s.add_argument("--set", action="append", metavar="KEY=VALUE", help="any other solver option")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="run (or resume) a benchmark run-matrix file")
    b.add_argument("config")
    b.add_argument("--output-dir", dest="output_dir")
    b.add_argument("--no-plots", action="store_true")
    b.set_defaults(func=cmd_bench)

    e = sub.add_parser("export", help="export an instance, or score an imported solution")
    e.add_argument("--in", dest="input", required=True)
    e.add_argument("--format", choices=("native", "lp-text"), default="lp-text")
    e.add_argument("--out")
    e.add_argument("--import-solution", dest="import_solution", metavar="FILE")
    e.add_argument("--best", type=float, help="best known energy, for relative accuracy")
    e.set_defaults(func=cmd_export)

    m = sub.add_parser("gset-to-qubo", help="convert a G-set Max-Cut graph to a QUBO instance")
    m.add_argument("--in", dest="input", required=True)
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_gset_to_qubo)

    r = sub.add_parser("report", help="rebuild aggregate.json, summary.md and plots from records.csv")
    r.add_argument("run_dir")
    r.add_argument("--no-plots", action="store_true")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"qubosmith {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, ContractError, CapacityError, QuboError, OSError) as exc:
        print(f"qubosmith {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())

"""Benchmark metrics, solve-only timing, aggregation and report files."""

import csv
import datetime as _dt
import json
import logging
import math
import os
import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, DomainError, InsufficientDataError, QuboError

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "instance_id",
    "n",
    "sigma",
    "density",
    "solver_id",
    "energy",
    "relative_accuracy",
    "solve_time_s",
    "seed",
    "status",
)
DEFAULT_MEMORY_CAP = 24 * 1024**3
DEFAULT_REPETITIONS = 3


@dataclass
class RunRecord:
    instance_id: str
    n: int
    sigma: float | None
    density: float
    solver_id: str
    energy: float
    solve_time: float
    seed: int
    status: str = "ok"
    relative_accuracy: float | None = None
    timestamp: str = field(default_factory=lambda: _dt.datetime.now(_dt.timezone.utc).isoformat())
    result: object = field(default=None, repr=False, compare=False)

    @property
    def ok(self):
        return self.status == "ok"


# -- metrics --------------------------------------------------------------


def relative_accuracy(e_solver, e_best):
    """Ratio ``e_solver / e_best`` for a negative best energy.

    For ``e_best >= 0`` the ratio is meaningless, so the monotone fallback
    ``1 - (e_solver - e_best) / (|e_best| + 1)`` is returned instead; use
    :func:`uses_fallback` to tell the two apart.
    """
    if e_best < 0:
        return e_solver / e_best
    return 1.0 - (e_solver - e_best) / (abs(e_best) + 1.0)


def uses_fallback(e_best):
    return not e_best < 0


def optimality_gap(bound, incumbent):
    """``|bound - incumbent| / |incumbent|``."""
    if incumbent == 0:
        raise DomainError("optimality gap is undefined for a zero incumbent")
    return abs(bound - incumbent) / abs(incumbent)


def scaling_exponent(records, solver_id):
    """Least-squares slope of log(median time) against log(n)."""
    times = {}
    for r in records:
        if r.solver_id == solver_id and r.ok:
            times.setdefault(r.n, []).append(r.solve_time)
    if len(times) < 4:
        raise InsufficientDataError(f"need at least 4 distinct sizes for {solver_id!r}, got {len(times)}")
    ns = sorted(times)
    x = np.log(np.array(ns, dtype=np.float64))
    y = np.log(np.array([statistics.median(times[n]) for n in ns]))
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


# -- timing -----------------------------------------------------------------

_warm = False


def warmup():
    """Compile every solver kernel once so no timed window pays for JIT."""
    global _warm
    if _warm:
        return
    from .core import QuboMatrix
    from .solvers import SOLVERS, SolverConfig

    cfg = SolverConfig(reads=2, sweeps=2).replace(timeout_ms=0, stagnation_limit=4, num_iterations=1)
    for Q in (
        QuboMatrix.from_entries(4, [(0, 1, -1.0), (1, 2, 0.5), (2, 3, -0.5), (0, 0, 0.2)], storage="dense"),
        QuboMatrix.from_entries(4, [(0, 1, -1.0), (1, 2, 0.5), (2, 3, -0.5), (0, 0, 0.2)], storage="sparse"),
    ):
        for solve in SOLVERS.values():
            solve(Q, cfg)
    _warm = True


def resolve_solver(solver, cfg=None, **decomposition):
    """Turn a solver id (or callable) plus config into ``f(Q) -> SolveResult``."""
    from .solvers import DECOMPOSITION_PREFIX, SolverConfig, get_solver

    if callable(solver):
        return lambda Q: solver(Q, cfg)
    if solver.startswith(DECOMPOSITION_PREFIX):
        from .decomposition import DecompositionConfig, solve_decomposed

        inner = solver[len(DECOMPOSITION_PREFIX) :]
        get_solver(inner)
        inner_cfg = cfg if cfg is not None else SolverConfig(reads=50)
        dcfg = DecompositionConfig(inner_solver=inner, inner_config=inner_cfg, **decomposition)
        if "seed" not in decomposition:
            dcfg.seed = inner_cfg.seed
        return lambda Q: solve_decomposed(Q, dcfg)
    fn = get_solver(solver)
    return lambda Q: fn(Q, cfg)


def timed_solve(
    Q,
    solver,
    cfg=None,
    *,
    repetitions=DEFAULT_REPETITIONS,
    instance_id="instance",
    sigma=None,
    memory_cap=DEFAULT_MEMORY_CAP,
    time_limit=None,
    decomposition=None,
):
    """Time only the solver call and return a :class:`RunRecord`.

    ``Q`` must already be in memory: parsing and construction sit outside the
    measured window. The solve is repeated ``repetitions`` times and the
    median wall time (monotonic clock) is reported; the energy and result
    come from the first repetition. Failures come back as records with a
    non-``ok`` status instead of raising.
    """
    solver_id = solver if isinstance(solver, str) else getattr(solver, "__name__", "custom")
    seed = getattr(cfg, "seed", 0) if cfg is not None else 0
    if decomposition and "seed" in decomposition:
        seed = decomposition["seed"]
    try:
        density = Q.density if Q.n >= 2 else 1.0
    except DomainError:
        density = 1.0

    def failed(status):
        return RunRecord(instance_id, Q.n, sigma, density, solver_id, math.nan, math.nan, seed, status=status)

    if Q.nbytes() * 3 > memory_cap:
        return failed(f"failed: memory cap of {memory_cap} bytes")
    try:
        run = resolve_solver(solver, cfg, **(decomposition or {}))
        warmup()
        times = []
        first = None
        for _ in range(repetitions):
            t0 = time.perf_counter()
            res = run(Q)
            times.append(time.perf_counter() - t0)
            first = first or res
    except (QuboError, MemoryError) as exc:
        kind = "capacity" if isinstance(exc, CapacityError) else type(exc).__name__
        log.warning("%s on %s failed: %s", solver_id, instance_id, exc)
        return failed(f"failed: {kind}: {exc}")
    elapsed = statistics.median(times)
    rec = RunRecord(instance_id, Q.n, sigma, density, solver_id, first.best_energy, elapsed, seed, result=first)
    if time_limit is not None and elapsed > time_limit:
        rec.status = "failed: time limit"
    return rec


# -- aggregation -------------------------------------------------------------


def assign_relative_accuracy(records):
    """Fill ``relative_accuracy`` per instance; returns instance ids that used the fallback."""
    best = {}
    for r in records:
        if r.ok:
            best[r.instance_id] = min(best.get(r.instance_id, math.inf), r.energy)
    fallback = set()
    for r in records:
        if r.ok:
            e_best = best[r.instance_id]
            if uses_fallback(e_best):
                fallback.add(r.instance_id)
            r.relative_accuracy = relative_accuracy(r.energy, e_best)
        else:
            r.relative_accuracy = None
    return sorted(fallback)


def _mean(values):
    # fsum is correctly rounded, so the result does not depend on record order.
    try:
        return math.fsum(values) / len(values)
    except (OverflowError, ValueError):  # inf - inf, or an overflowing partial sum
        return math.nan


def _pstdev(values):
    m = _mean(values)
    # d * d saturates to inf on extreme ratios where ** would raise.
    return math.sqrt(math.fsum((v - m) * (v - m) for v in values) / len(values))


def aggregate(records):
    """Per-(n, solver) statistics; order of ``records`` does not matter."""
    fallback = assign_relative_accuracy(records)
    groups = {}
    for r in records:
        g = groups.setdefault((r.n, r.solver_id), {"acc": [], "time": [], "failures": 0, "instances": set()})
        g["instances"].add(r.instance_id)
        if r.ok:
            g["acc"].append(r.relative_accuracy)
            g["time"].append(r.solve_time)
        else:
            g["failures"] += 1
    rows = []
    for (n, solver_id), g in sorted(groups.items()):
        acc = sorted(g["acc"])
        rows.append(
            {
                "n": n,
                "solver_id": solver_id,
                "runs": len(acc),
                "failures": g["failures"],
                "mean_relative_accuracy": _mean(acc) if acc else None,
                "std_relative_accuracy": _pstdev(acc) if acc else None,
                "median_solve_time_s": statistics.median(g["time"]) if g["time"] else None,
            }
        )
    return {"groups": rows, "fallback_instances": fallback, "ratio_path_only": not fallback}


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return f"{v:.17g}"
    return str(v)


def write_records_csv(records, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow(
                [
                    r.instance_id,
                    r.n,
                    _fmt(r.sigma),
                    _fmt(r.density),
                    r.solver_id,
                    _fmt(float(r.energy)),
                    _fmt(r.relative_accuracy),
                    _fmt(float(r.solve_time)),
                    r.seed,
                    r.status,
                ]
            )


def read_records_csv(path):
    def num(s):
        return float(s) if s not in ("",) else None

    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise QuboError(f"{path}: unexpected CSV columns {reader.fieldnames}")
        for row in reader:
            out.append(
                RunRecord(
                    instance_id=row["instance_id"],
                    n=int(row["n"]),
                    sigma=num(row["sigma"]),
                    density=float(row["density"]),
                    solver_id=row["solver_id"],
                    energy=float(row["energy"]),
                    solve_time=float(row["solve_time_s"]),
                    seed=int(row["seed"]),
                    status=row["status"],
                    relative_accuracy=num(row["relative_accuracy"]),
                    timestamp="",
                )
            )
    return out


def summary_markdown(agg):
    lines = [
        "| n | solver | runs | failures | mean rel. accuracy | std | median solve time (s) |",
        "|---:|---|---:|---:|---:|---:|---:|",
    ]
    for g in agg["groups"]:
        def f(v, spec):
            return "n/a" if v is None else format(v, spec)

        lines.append(
            f"| {g['n']} | {g['solver_id']} | {g['runs']} | {g['failures']} | "
            f"{f(g['mean_relative_accuracy'], '.6f')} | {f(g['std_relative_accuracy'], '.6f')} | "
            f"{f(g['median_solve_time_s'], '.4g')} |"
        )
    note = (
        "All relative accuracies use the ratio form."
        if agg["ratio_path_only"]
        else "Fallback score used (best energy >= 0) for: " + ", ".join(agg["fallback_instances"])
    )
    return "# Benchmark summary\n\n" + "\n".join(lines) + "\n\n" + note + "\n"


def write_plots(agg, directory):
    """Accuracy-vs-n and time-vs-n line charts as SVG; skipped without matplotlib."""
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        log.info("matplotlib not installed; skipping plots")
        return []
    matplotlib.rcParams["svg.hashsalt"] = "qubosmith"
    os.makedirs(directory, exist_ok=True)
    by_solver = {}
    for g in agg["groups"]:
        by_solver.setdefault(g["solver_id"], []).append(g)
    paths = []
    for key, ylabel, fname, logy in (
        ("mean_relative_accuracy", "relative accuracy", "accuracy_vs_n.svg", False),
        ("median_solve_time_s", "median solve time (s)", "time_vs_n.svg", True),
    ):
        fig, ax = plt.subplots(figsize=(6, 4))
        for solver_id, rows in sorted(by_solver.items()):
            rows = [r for r in rows if r[key] is not None]
            if not rows:
                continue
            xs = [r["n"] for r in rows]
            ys = [r[key] for r in rows]
            if key == "mean_relative_accuracy":
                err = [r["std_relative_accuracy"] for r in rows]
                ax.errorbar(xs, ys, yerr=err, marker="o", capsize=3, label=solver_id)
            else:
                ax.plot(xs, ys, marker="o", label=solver_id)
        ax.set_xscale("log")
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel("problem size n")
        ax.set_ylabel(ylabel)
        ax.legend()
        fig.tight_layout()
        path = os.path.join(directory, fname)
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        paths.append(path)
    return paths


def aggregate_and_emit(records, out_dir, plots=True):
    """Write records.csv, aggregate.json, summary.md and plots/*.svg."""
    if not records:
        raise InsufficientDataError("no records to aggregate")
    os.makedirs(out_dir, exist_ok=True)
    agg = aggregate(records)
    write_records_csv(records, os.path.join(out_dir, "records.csv"))
    with open(os.path.join(out_dir, "aggregate.json"), "w", encoding="utf-8") as fh:
        json.dump(agg, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(out_dir, "summary.md"), "w", encoding="utf-8") as fh:
        fh.write(summary_markdown(agg))
    if plots:
        write_plots(agg, os.path.join(out_dir, "plots"))
    return agg

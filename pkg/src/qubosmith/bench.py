"""Declarative, resumable benchmark runs over an instance x solver matrix.

Run-matrix file (TOML)::

    run_id = "desk-scale"            # directory name under output_dir
    output_dir = "runs"
    seed = 2024                      # instance seeds and default solver seed
    sizes = [120, 200]               # dense Gaussian instances ...
    sigmas = [0.1, 1.0]              # ... one per (size, sigma, k)
    instances_per_cell = 1
    repetitions = 3                  # timed repetitions, median reported
    time_limit_per_solve = 7200.0    # seconds; slower solves are marked failed
    plots = true

    [[instances]]                    # optional extra instances from files
    id = "G11"
    path = "graphs/G11.txt"
    format = "gset"                  # or "qubo" (native format)

    [[solvers]]
    id = "sa"                        # bf | sa | sd | ts | pticm | qbsolv-like:<inner>
    label = "sa-100"                 # optional; defaults to id
    reads = 100                      # any SolverConfig option
    sweeps = 100
    sub_size = 30                    # qbsolv-like only: sub_size, stall_limit,
                                     # selection, max_rounds

Output: ``<output_dir>/<run_id>/`` holding ``instances/*.qubo``,
``records.csv``, ``aggregate.json``, ``summary.md`` and ``plots/*.svg``.
A rerun skips every (instance, solver) cell already present in
``records.csv``.
"""

import os
import sys
from dataclasses import dataclass, field

from . import core, generators
from .errors import ConfigError, QuboError
from .harness import (
    DEFAULT_REPETITIONS,
    aggregate_and_emit,
    read_records_csv,
    timed_solve,
    write_records_csv,
    assign_relative_accuracy,
)
from .solvers import DECOMPOSITION_PREFIX, SolverConfig, is_known

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DECOMPOSITION_KEYS = ("sub_size", "stall_limit", "selection", "max_rounds")
TOP_LEVEL_KEYS = {
    "run_id",
    "output_dir",
    "seed",
    "sizes",
    "sigmas",
    "instances_per_cell",
    "repetitions",
    "time_limit_per_solve",
    "plots",
    "instances",
    "solvers",
}


@dataclass
class SolverEntry:
    solver_id: str
    label: str
    config: SolverConfig
    decomposition: dict = field(default_factory=dict)


@dataclass
class InstanceEntry:
    instance_id: str
    path: str
    format: str


@dataclass
class RunMatrixConfig:
    run_id: str
    output_dir: str
    seed: int
    sizes: list
    sigmas: list
    solvers: list
    instances_per_cell: int = 1
    repetitions: int = DEFAULT_REPETITIONS
    time_limit_per_solve: float = 7200.0
    plots: bool = True
    instances: list = field(default_factory=list)

    @property
    def run_dir(self):
        return os.path.join(self.output_dir, self.run_id)


def load_config(path, output_dir=None):
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    base = os.path.dirname(os.path.abspath(path))
    cfg = parse_config(data, base_dir=base)
    if output_dir is not None:
        cfg.output_dir = output_dir
    return cfg


def parse_config(data, base_dir="."):
    """Validate a run-matrix mapping; every error surfaces before any solve."""
    unknown = set(data) - TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    sizes = list(data.get("sizes", []))
    sigmas = list(data.get("sigmas", []))
    extra = data.get("instances", [])
    if not sizes and not extra:
        raise ConfigError("config needs non-empty 'sizes' (or explicit 'instances')")
    if sizes and not sigmas:
        raise ConfigError("config needs non-empty 'sigmas' when 'sizes' is given")
    for n in sizes:
        if not isinstance(n, int) or isinstance(n, bool) or not 1 <= n <= core.MAX_N:
            raise ConfigError(f"bad size {n!r}")
    for s in sigmas:
        if not isinstance(s, (int, float)) or isinstance(s, bool) or not s > 0:
            raise ConfigError(f"bad sigma {s!r}")
    seed = data.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("seed must be an integer")
    raw_solvers = data.get("solvers", [])
    if not raw_solvers:
        raise ConfigError("config needs at least one [[solvers]] entry")
    solvers = []
    labels = set()
    for entry in raw_solvers:
        entry = dict(entry)
        sid = entry.pop("id", None)
        if not isinstance(sid, str) or not is_known(sid):
            raise ConfigError(f"unknown solver id {sid!r}")
        label = entry.pop("label", sid)
        if label in labels:
            raise ConfigError(f"duplicate solver label {label!r}; set 'label' to tell entries apart")
        labels.add(label)
        decomposition = {k: entry.pop(k) for k in DECOMPOSITION_KEYS if k in entry}
        if decomposition and not sid.startswith(DECOMPOSITION_PREFIX):
            raise ConfigError(f"{sorted(decomposition)} only apply to {DECOMPOSITION_PREFIX}<inner> solvers")
        entry.setdefault("seed", seed)
        if sid.startswith(DECOMPOSITION_PREFIX):
            entry.setdefault("reads", 50)
        config = SolverConfig.from_dict(entry)
        if sid.startswith(DECOMPOSITION_PREFIX):
            from .decomposition import DecompositionConfig

            DecompositionConfig(inner_solver=sid[len(DECOMPOSITION_PREFIX) :], **decomposition).validate()
        solvers.append(SolverEntry(sid, label, config, decomposition))
    instances = []
    for item in extra:
        try:
            inst = InstanceEntry(str(item["id"]), os.path.join(base_dir, item["path"]), item.get("format", "qubo"))
        except KeyError as exc:
            raise ConfigError(f"instance entry missing {exc}") from None
        if inst.format not in ("qubo", "gset"):
            raise ConfigError(f"instance format must be 'qubo' or 'gset', got {inst.format!r}")
        instances.append(inst)
    cfg = RunMatrixConfig(
        run_id=str(data.get("run_id", "run")),
        output_dir=str(data.get("output_dir", "runs")),
        seed=seed,
        sizes=sizes,
        sigmas=[float(s) for s in sigmas],
        solvers=solvers,
        instances_per_cell=int(data.get("instances_per_cell", 1)),
        repetitions=int(data.get("repetitions", DEFAULT_REPETITIONS)),
        time_limit_per_solve=float(data.get("time_limit_per_solve", 7200.0)),
        plots=bool(data.get("plots", True)),
        instances=instances,
    )
    if cfg.instances_per_cell < 1 or cfg.repetitions < 1 or cfg.time_limit_per_solve <= 0:
        raise ConfigError("instances_per_cell and repetitions must be >= 1, time limit > 0")
    return cfg


def _instances(cfg, inst_dir):
    """Yield ``(instance_id, sigma, loader)``; generation and parsing are untimed."""
    for spec in generators.suite_specs(cfg.sizes, cfg.sigmas, cfg.instances_per_cell, cfg.seed):
        path = os.path.join(inst_dir, f"{spec.instance_id}.qubo")

        def load(spec=spec, path=path):
            if os.path.exists(path):
                return core.read_qubo(path)
            Q = generators.random_qubo(spec)
            core.write_qubo(Q, path)
            return Q

        yield spec.instance_id, spec.sigma, load
    for inst in cfg.instances:
        if inst.format == "gset":
            def load(inst=inst):
                return generators.maxcut_to_qubo(generators.read_gset(inst.path))
        else:
            def load(inst=inst):
                return core.read_qubo(inst.path)
        yield inst.instance_id, None, load


def run_bench(cfg, log=print):
    """Execute (or resume) a run matrix; returns a summary dict."""
    run_dir = cfg.run_dir
    inst_dir = os.path.join(run_dir, "instances")
    os.makedirs(inst_dir, exist_ok=True)
    csv_path = os.path.join(run_dir, "records.csv")
    records = read_records_csv(csv_path) if os.path.exists(csv_path) else []
    done = {(r.instance_id, r.solver_id) for r in records}

    new_solves = skipped = 0
    for instance_id, sigma, load in _instances(cfg, inst_dir):
        pending = [s for s in cfg.solvers if (instance_id, s.label) not in done]
        skipped += len(cfg.solvers) - len(pending)
        if not pending:
            continue
        Q = load()
        for entry in pending:
            rec = timed_solve(
                Q,
                entry.solver_id,
                entry.config,
                repetitions=cfg.repetitions,
                instance_id=instance_id,
                sigma=sigma,
                time_limit=cfg.time_limit_per_solve,
                decomposition=entry.decomposition or None,
            )
            rec.solver_id = entry.label
            rec.result = None
            records.append(rec)
            done.add((instance_id, entry.label))
            new_solves += 1
            log(f"{instance_id} {entry.label}: {rec.status} energy={rec.energy!r} time={rec.solve_time:.4g}s")
            # Persist after every cell so an interrupted run resumes here.
            assign_relative_accuracy(records)
            write_records_csv(records, csv_path)
    if not records:
        raise QuboError("run produced no records")
    agg = aggregate_and_emit(records, run_dir, plots=cfg.plots)
    return {
        "run_dir": run_dir,
        "new_solves": new_solves,
        "skipped": skipped,
        "records": len(records),
        "failures": sum(not r.ok for r in records),
        "ratio_path_only": agg["ratio_path_only"],
    }

"""Solver configuration and result types."""

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError


@dataclass
class Schedule:
    """Geometric temperature schedule; ``None`` endpoints are derived from the instance."""

    kind: str = "geometric"
    t_hot: float | None = None
    t_cold: float | None = None


@dataclass
class TabuParams:
    """Tabu search knobs.

    ``tenure=None`` means ``min(20, max(4, n // 10))``; ``stagnation_limit=None``
    means ``max(100, 10 * n)`` non-improving iterations. A ``timeout_ms`` of
    ``None`` or 0 disables the wall-clock limit, which makes reads
    deterministic.
    """

    tenure: int | None = None
    timeout_ms: float | None = 100.0
    stagnation_limit: int | None = None


@dataclass
class PticmParams:
    num_replicas: int = 10
    num_iterations: int = 10
    beta_ladder: list | None = None


@dataclass
class SolverConfig:
    reads: int = 1000
    sweeps: int = 1000
    seed: int = 0
    schedule: Schedule = field(default_factory=Schedule)
    tabu: TabuParams = field(default_factory=TabuParams)
    pticm: PticmParams = field(default_factory=PticmParams)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not _is_int(self.reads) or self.reads < 1:
            raise ConfigError(f"reads must be an integer >= 1, got {self.reads!r}")
        if not _is_int(self.sweeps) or self.sweeps < 1:
            raise ConfigError(f"sweeps must be an integer >= 1, got {self.sweeps!r}")
        if not _is_int(self.seed):
            raise ConfigError(f"seed must be an integer, got {self.seed!r}")
        s = self.schedule
        if s.kind != "geometric":
            raise ConfigError(f"unsupported schedule {s.kind!r}")
        for name in ("t_hot", "t_cold"):
            t = getattr(s, name)
            if t is not None and not (t > 0 and np.isfinite(t)):
                raise ConfigError(f"{name} must be positive, got {t!r}")
        if s.t_hot is not None and s.t_cold is not None and s.t_cold > s.t_hot:
            raise ConfigError("t_cold must not exceed t_hot")
        t = self.tabu
        if t.tenure is not None and (not _is_int(t.tenure) or t.tenure < 0):
            raise ConfigError(f"tenure must be a non-negative integer, got {t.tenure!r}")
        if t.stagnation_limit is not None and (not _is_int(t.stagnation_limit) or t.stagnation_limit < 1):
            raise ConfigError("stagnation_limit must be an integer >= 1")
        if t.timeout_ms is not None and t.timeout_ms < 0:
            raise ConfigError("timeout_ms must be non-negative")
        p = self.pticm
        if not _is_int(p.num_replicas) or p.num_replicas < 4 or p.num_replicas % 2:
            raise ConfigError(f"num_replicas must be even and >= 4, got {p.num_replicas!r}")
        if not _is_int(p.num_iterations) or p.num_iterations < 1:
            raise ConfigError("num_iterations must be an integer >= 1")
        if p.beta_ladder is not None:
            ladder = list(p.beta_ladder)
            if len(ladder) != p.num_replicas // 2:
                raise ConfigError(f"beta_ladder needs {p.num_replicas // 2} levels (one per chain pair)")
            if any(not (b > 0) for b in ladder):
                raise ConfigError("beta_ladder entries must be positive")
        return self

    def replace(self, **overrides):
        """Copy with flat overrides, e.g. ``cfg.replace(reads=10, tenure=5)``."""
        return SolverConfig.from_dict(overrides, base=self)

    @classmethod
    def from_dict(cls, data, base=None):
        """Build from a flat mapping of option names (unknown keys are errors)."""
        base = base or cls()
        top = {}
        nested = {
            "schedule": dataclasses.asdict(base.schedule),
            "tabu": dataclasses.asdict(base.tabu),
            "pticm": dataclasses.asdict(base.pticm),
        }
        for key, value in data.items():
            if key in ("reads", "sweeps", "seed"):
                top[key] = value
                continue
            for group, values in nested.items():
                if key in values:
                    values[key] = value
                    break
            else:
                raise ConfigError(f"unknown solver option {key!r}")
        return cls(
            reads=top.get("reads", base.reads),
            sweeps=top.get("sweeps", base.sweeps),
            seed=top.get("seed", base.seed),
            schedule=Schedule(**nested["schedule"]),
            tabu=TabuParams(**nested["tabu"]),
            pticm=PticmParams(**nested["pticm"]),
        )

    def to_dict(self):
        out = {"reads": self.reads, "sweeps": self.sweeps, "seed": self.seed}
        for group in (self.schedule, self.tabu, self.pticm):
            out.update(dataclasses.asdict(group))
        return out


def _is_int(v):
    return isinstance(v, (int, np.integer)) and not isinstance(v, bool)


@dataclass
class SolveResult:
    best_bits: np.ndarray
    best_energy: float
    read_energies: np.ndarray
    solve_time: float
    solver_id: str
    metadata: dict = field(default_factory=dict)

    def to_dict(self):
        from ..bitpack import pack_bits

        return {
            "solver_id": self.solver_id,
            "energy": self.best_energy,
            "bits": pack_bits(self.best_bits),
            "num_reads": int(len(self.read_energies)),
            "solve_time_s": self.solve_time,
            "metadata": _jsonable(self.metadata),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj

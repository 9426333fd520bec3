"""The classical solvers behind one calling convention: ``solver(Q, cfg) -> SolveResult``."""

from .anneal import simulated_annealing, steepest_descent
from .brute import BRUTE_FORCE_MAX_N, brute_force
from .config import PticmParams, Schedule, SolveResult, SolverConfig, TabuParams
from .pticm import pt_icm
from .tabu import tabu_search, tabu_walk
from ..errors import ConfigError

SOLVERS = {
    "bf": brute_force,
    "sa": simulated_annealing,
    "sd": steepest_descent,
    "ts": tabu_search,
    "pticm": pt_icm,
}

DECOMPOSITION_PREFIX = "qbsolv-like:"


def is_known(solver_id):
    if solver_id.startswith(DECOMPOSITION_PREFIX):
        return solver_id[len(DECOMPOSITION_PREFIX):] in SOLVERS
    return solver_id in SOLVERS


def get_solver(solver_id):
    """Look up a solver by id; ``qbsolv-like:<inner>`` is not handled here."""
    try:
        return SOLVERS[solver_id]
    except KeyError:
        raise ConfigError(f"unknown solver id {solver_id!r}; choose from {sorted(SOLVERS)}") from None


__all__ = [
    "BRUTE_FORCE_MAX_N",
    "DECOMPOSITION_PREFIX",
    "PticmParams",
    "SOLVERS",
    "Schedule",
    "SolveResult",
    "SolverConfig",
    "TabuParams",
    "brute_force",
    "get_solver",
    "is_known",
    "pt_icm",
    "simulated_annealing",
    "steepest_descent",
    "tabu_search",
    "tabu_walk",
]

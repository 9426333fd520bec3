"""Classical QUBO solvers, instance generators and a benchmarking harness."""

from .core import EnergyState, QuboMatrix, apply_flip, energy, flip_delta, read_qubo, write_qubo
from .errors import (
    CapacityError,
    ConfigError,
    ContractError,
    DomainError,
    InsufficientDataError,
    ParseError,
    QuboError,
)

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "ConfigError",
    "ContractError",
    "DomainError",
    "EnergyState",
    "InsufficientDataError",
    "ParseError",
    "QuboError",
    "QuboMatrix",
    "apply_flip",
    "energy",
    "flip_delta",
    "read_qubo",
    "write_qubo",
]

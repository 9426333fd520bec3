"""Exception hierarchy shared by every qubosmith module."""


class QuboError(Exception):
    """Base class for all library errors."""


class ContractError(QuboError, ValueError):
    """An input violated an operation's precondition (shape, range, value)."""


class CapacityError(QuboError):
    """A request exceeds a configured size cap (memory, enumeration)."""


class ConfigError(QuboError, ValueError):
    """A solver or run configuration is invalid."""


class DomainError(QuboError, ValueError):
    """A metric was asked for outside its mathematical domain."""


class InsufficientDataError(QuboError):
    """Not enough data points to fit a statistic."""


class ParseError(QuboError, ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)

from typing import Any, Optional


class HabitProxError(Exception):
    """Base class for all habitprox errors."""


class ConfigError(HabitProxError, ValueError):
    """Raised when an experiment config or a domain parameter is invalid.

    Args:
        message (str): Human readable description
        field (Optional[str]): Dotted path of the offending field
        line (Optional[int]): Line number in the config file, when known
    """

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        self.message = message
        self.field = field
        self.line = line
        location = ""
        if field:
            location += f"[{field}] "
        if line is not None:
            location += f"(line {line}) "
        super().__init__(f"{location}{message}")


class UnsupportedSpaceError(HabitProxError, ValueError):
    """Raised when a finite-grid-only operation receives a continuous box."""


class ProbeRefusedError(HabitProxError, ValueError):
    """Raised when a probe's preconditions (convexity, quadratic resistance) do not hold."""


class TrapMonotonicityError(HabitProxError, RuntimeError):
    """A trap at a lower lambda stopped being a trap at a higher lambda."""

    def __init__(self, message: str, lower: Any, higher: Any):
        self.lower = lower
        self.higher = higher
        super().__init__(message)


class EquivalenceViolationError(HabitProxError, RuntimeError):
    """A runtime cross-check of two formulations that must agree has failed."""


class OutputError(HabitProxError, OSError):
    """Raised when an experiment output file cannot be written."""

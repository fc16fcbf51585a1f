"""Exception hierarchy shared by all modules.

The CLI maps :class:`ConfigError`/:class:`DomainError` to exit code 2 and
:class:`NumericalError` (and subclasses) to exit code 3.
"""


class CqaError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(CqaError, ValueError):
    """Invalid scenario or sweep configuration."""


class DomainError(CqaError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class NumericalError(CqaError, ArithmeticError):
    """A numerical routine failed (non-convergence, singular system, ...)."""


class InfeasibleError(NumericalError):
    """The requested construction has no solution (e.g. empty null space)."""


class RankError(NumericalError):
    """A matrix is rank deficient where full rank is required."""


class DegenerateError(NumericalError):
    """A normalization or scaling would divide by zero."""

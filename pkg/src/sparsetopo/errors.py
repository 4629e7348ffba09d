"""Exception types shared across the package.

The CLI maps each family onto an exit code, so every error raised by the
library derives from one of the three bases below.
"""


class SparsetopoError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SparsetopoError, ValueError):
    """Invalid parameters or violated preconditions."""


class DimensionError(ConfigurationError):
    """Shapes, lengths or node sets do not line up."""


class ParseError(ConfigurationError):
    """Malformed input file content."""


class DomainError(ConfigurationError):
    """A value lies outside the domain of an operation."""


class ExtrapolationError(ConfigurationError):
    """Requested evaluation outside the observed range."""


class BudgetError(ConfigurationError):
    """Exhaustive enumeration would exceed the configured budget."""


class NumericalError(SparsetopoError, ArithmeticError):
    """A numerical procedure failed."""


class SingularityError(NumericalError):
    """Singular normal equations."""


class InstabilityError(NumericalError):
    """A simulated recursion diverged."""

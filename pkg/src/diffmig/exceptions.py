"""Exception types shared across the package.

The command line maps each family to a distinct exit status, so library code
raises the most specific class available.
"""


class DataError(ValueError):
    """Malformed or inconsistent observation data."""


class NumericalError(ArithmeticError):
    """Base class for numerical failures."""


class NumericalDomainError(NumericalError, ValueError):
    """An argument lies outside the domain where a formula is defined."""


class ConvergenceError(NumericalError):
    """An iterative or truncated computation failed to converge."""

"""Exception types shared across the package.

The CLI maps these onto exit codes: invalid input -> 1, resource limits -> 2,
numeric failures -> 3.
"""


class DavenportError(Exception):
    """Base class for all package errors."""

    exit_code = 3


class InvalidInputError(DavenportError, ValueError):
    exit_code = 1


class ResourceLimitError(DavenportError, RuntimeError):
    exit_code = 2


class NumericError(DavenportError, ArithmeticError):
    exit_code = 3

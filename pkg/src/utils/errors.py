"""
Toolkit Errors

Exception types raised by the library and mapped to exit codes by the CLI.
"""

from typing import Optional


class ToolkitError(Exception):
    """Base class for every error raised on purpose by the toolkit."""


class ParameterError(ToolkitError, ValueError):
    """A precondition on an argument does not hold."""


class ConvergenceError(ToolkitError, ArithmeticError):
    """The Jacobi eigensolver hit its sweep cap."""


class FormatError(ToolkitError, ValueError):
    """A file could not be parsed."""

    def __init__(self, message: str, offset: Optional[int] = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)


class UsageError(ToolkitError):
    """Invalid command-line flags or configuration keys."""


class CheckFailed(ToolkitError):
    """A `--check` assertion did not hold."""

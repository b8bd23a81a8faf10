"""Exception types raised across the package.

All of them derive from ``ValueError`` so callers that only care about
"bad input" can catch a single type.
"""

from __future__ import annotations


class GreedyMatchError(ValueError):
    """Base class for all package errors."""


class InvalidSizeError(GreedyMatchError):
    pass


class InvalidParameterError(GreedyMatchError):
    pass


class InvalidInputError(GreedyMatchError):
    pass


class WrongFamilyError(GreedyMatchError):
    """The graph does not belong to the family an oracle requires."""


class SizeLimitError(GreedyMatchError):
    """The instance is too large for an exhaustive method."""


class UnsupportedCaseError(GreedyMatchError):
    """No closed form is available; use simulation instead."""


class NoSteadyStateError(GreedyMatchError):
    pass


class NumericalError(GreedyMatchError):
    pass


class ConfigError(GreedyMatchError):
    pass


class ParseError(GreedyMatchError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)

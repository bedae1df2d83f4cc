"""Exception hierarchy shared across the package.

Callers that want a single catch-all can catch :class:`FrugalError`;
the subclasses also inherit from the closest builtin so existing
``except ValueError`` style code keeps working.
"""


class FrugalError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgument(FrugalError, ValueError):
    """A caller-supplied value violates a documented precondition."""


class InvalidState(FrugalError, RuntimeError):
    """An operation was invoked in a state where it is undefined."""


class NumericFailure(FrugalError, ArithmeticError):
    """A numeric computation produced a non-finite intermediate value."""


class DataFormatError(FrugalError):
    """Stored bytes do not match any supported format or version."""


class DataIOError(FrugalError, OSError):
    """A data file is missing, truncated, or otherwise unreadable."""

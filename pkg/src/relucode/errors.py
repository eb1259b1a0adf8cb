"""Exception types shared across the package.

All validation-style failures derive from ValueError so callers can catch
broadly; numerical failures (LP iteration limits, diverged training) derive
from RuntimeError.
"""


class ShapeError(ValueError):
    """An input vector or matrix has the wrong dimensions."""


class ValidationError(ValueError):
    """A value violates a structural invariant (non-finite entries, bad chain)."""


class FormatError(ValueError):
    """A file does not conform to its declared format.

    `location` carries a human-readable position (byte offset or line:col)
    when one is known.
    """

    def __init__(self, message, location=None):
        if location is not None:
            message = f"{message} (at {location})"
        super().__init__(message)
        self.location = location


class IncompatibleCodesError(ValueError):
    """Codes from different networks (or of different lengths) were mixed."""


class InvalidThresholdError(ValueError):
    """A truncation threshold that does not yield a metric (theta == 0)."""


class PreconditionError(ValueError):
    """An operation was called outside its stated precondition."""


class SeriesError(ValueError):
    """A checkpoint series is inconsistent (architecture drift across files)."""


class NumericalFailureError(RuntimeError):
    """An iterative numerical routine failed to converge.

    `iterations` carries the iteration count at abort.
    """

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class TrainingDivergedError(RuntimeError):
    """Training produced a non-finite loss. `epoch` names the failing epoch."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch

"""Exception types shared across the package.

Preconditions that callers can reasonably violate raise PreconditionError
(the CLI maps it to exit code 2).  Requests for a finite constant that the
scan certifies as divergent raise DivergenceError (exit code 3).
"""


class SparseHeatError(Exception):
    """Base class for all package errors."""


class PreconditionError(SparseHeatError, ValueError):
    """An operation was called with arguments violating its contract."""


class NotLocallyIntegrableError(PreconditionError):
    """A weight has a non-integrable point singularity inside the region."""


class ScanTooLargeError(PreconditionError):
    """A cube scan would enumerate more cubes than the configured cap."""


class DecayError(PreconditionError):
    """Input field averages do not decay at the top of the scan."""


class TimeTooLargeError(PreconditionError):
    """Heat truncation radius does not fit in the box for this time."""

    def __init__(self, message: str, minimal_halfwidth: float):
        super().__init__(message)
        self.minimal_halfwidth = minimal_halfwidth


class NoContractionError(SparseHeatError):
    """Picard iteration failed to contract at the requested horizon."""


class DivergenceError(SparseHeatError):
    """A constant that must be finite was flagged divergent."""

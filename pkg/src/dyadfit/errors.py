"""Exception hierarchy shared across the package.

Everything raised on purpose derives from DyadfitError so callers can
catch one base class.  DataError covers malformed inputs (bad shapes,
bad files, bad options); NumericError covers failures that arise during
computation on well-formed inputs.
"""


class DyadfitError(Exception):
    """Base class for all errors raised by dyadfit."""


class DataError(DyadfitError):
    """Invalid input data, file contents, or configuration."""


class NumericError(DyadfitError):
    """Numeric failure: non-finite values, overflow, or an ill-posed problem."""


class DegenerateDataError(NumericError):
    """The likelihood has no finite maximizer (degenerate or separated data)."""


class CollinearityError(NumericError):
    """The observed information is singular for the requested coordinates."""

    def __init__(self, coordinates, message=None):
        self.coordinates = list(coordinates)
        if message is None:
            message = (
                "observed information is singular; offending coordinates: "
                + ", ".join(str(c) for c in self.coordinates)
            )
        super().__init__(message)


class ConvergenceError(NumericError):
    """An iterative fit did not converge within its iteration budget."""


class StudyError(DyadfitError):
    """A simulation study failed (too many replication failures)."""

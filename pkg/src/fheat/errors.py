"""Exception hierarchy shared by every module."""


class FHeatError(Exception):
    """Base class for all library errors."""


class DomainError(FHeatError, ValueError):
    """A query leaves the truncated domain or its admissible range."""

    def __init__(self, message, needed_L=None):
        super().__init__(message)
        self.needed_L = needed_L


class DegenerateQueryError(FHeatError, ValueError):
    """Inputs violate the hypotheses of an inequality (ordering, zero measure)."""


class PreconditionError(FHeatError, ValueError):
    """An operation was called outside its documented preconditions."""


class ResolutionError(FHeatError, ValueError):
    """The grid is too coarse for the requested scale."""


class NumericError(FHeatError, RuntimeError):
    """A linear solve or eigensolve failed."""

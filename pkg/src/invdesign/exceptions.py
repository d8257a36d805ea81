"""Exception hierarchy shared by all modules."""


class InverseDesignError(Exception):
    """Base class for all errors raised by :mod:`invdesign`."""


class DomainError(InverseDesignError, ValueError):
    """A query falls outside the interval on which a flux is defined."""


class NonConvexFluxError(InverseDesignError, ValueError):
    """A flux table or speed law violates strict convexity/concavity."""


class NotReachable(InverseDesignError):
    """The target violates the Oleinik condition, so no initial datum exists.

    ``verdict`` carries the offending pair of grid points and the ratio.
    """

    def __init__(self, message, verdict=None):
        super().__init__(message)
        self.verdict = verdict


class ConstraintInfeasible(InverseDesignError):
    """The target takes values outside the constraint interval J."""


class SharpUndefined(InverseDesignError):
    """The sharp envelope requires a compact constraint interval."""


class GlueMismatch(InverseDesignError):
    """Two solutions cannot be glued: their traces differ."""

    def __init__(self, message, left_trace=None, right_trace=None):
        super().__init__(message)
        self.left_trace = left_trace
        self.right_trace = right_trace


class ProfileFormatError(InverseDesignError, ValueError):
    """Malformed or non-uniform profile file."""

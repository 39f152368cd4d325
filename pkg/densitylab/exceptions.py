"""
Errors raised by the densitylab library.

Every error is also a ValueError, so callers that only care about bad
input can catch that.
"""


class DensityLabError(ValueError):
    """Base class for all library errors."""


class DimensionMismatch(DensityLabError):
    pass


class DimensionLimitExceeded(DensityLabError):
    pass


class KindMismatch(DensityLabError):
    pass


class NotHermitian(DensityLabError):
    pass


class NotUnitary(DensityLabError):
    pass


class InvalidState(DensityLabError):
    """Vector or matrix that is not a valid normalized state."""


class InvalidWeights(DensityLabError):
    pass


class DegenerateLevel(DensityLabError):
    """The protected level has no gap, so it cannot be protected."""


class ScheduleError(DensityLabError):
    pass


class PointerOutOfGrid(DensityLabError):
    """The pointer wavepacket reached the edge of its grid."""


class IncompleteObservableSet(DensityLabError):
    pass


class InconsistentPrefix(DensityLabError):
    pass


class NonIntegralCounts(DensityLabError):
    pass


class NotQubit(DensityLabError):
    pass


class DefaultsError(DensityLabError):
    """The physical defaults table is missing, unreadable or incomplete."""

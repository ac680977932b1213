"""Exception hierarchy for wasserclust."""


class WasserclustError(ValueError):
    """Base class for all domain errors raised by the package."""


class HistogramError(WasserclustError):
    pass


class EmptyBins(HistogramError):
    pass


class NonContiguousBins(HistogramError):
    pass


class NonPositiveWeight(HistogramError):
    pass


class WeightSumMismatch(HistogramError):
    pass


class EmptySamples(HistogramError):
    pass


class OutOfDomain(HistogramError):
    pass


class ZeroDispersion(WasserclustError):
    pass


class DimensionMismatch(WasserclustError):
    pass


class InvalidCluster(WasserclustError):
    pass


class EmptyCluster(WasserclustError):
    pass


class KTooLarge(WasserclustError):
    pass


class InfeasibleMoments(WasserclustError):
    pass


class LengthMismatch(WasserclustError):
    pass


class DegenerateK(WasserclustError):
    pass


class MonotonicityViolation(AssertionError):
    """The clustering criterion increased between two steps."""

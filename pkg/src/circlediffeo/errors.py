"""Exception types shared across the package."""


class CircleDiffeoError(Exception):
    """Base class for all library errors."""


class IndeterminatePrecisionError(CircleDiffeoError):
    """Certified bounds are too coarse to decide a comparison."""


class DepthExhaustedError(CircleDiffeoError):
    def __init__(self, message, index_reached=None):
        super().__init__(message)
        self.index_reached = index_reached


class OutOfRangeError(CircleDiffeoError, ValueError):
    pass


class NormalizationUnavailableError(CircleDiffeoError):
    """A covering lift with a fixed point does not exist."""


class ToleranceNotMetError(CircleDiffeoError):
    pass


class OverflowGuardError(CircleDiffeoError):
    def __init__(self, message, N=None):
        super().__init__(message)
        self.N = N


class ScheduleInfeasibleError(CircleDiffeoError):
    pass


class EnclosureTooWideError(CircleDiffeoError):
    pass


class BudgetExceededError(CircleDiffeoError):
    pass


class EpsilonBelowResolutionError(CircleDiffeoError, ValueError):
    pass


class MalformedCertificateError(CircleDiffeoError, ValueError):
    pass


class TruncationInsufficientError(CircleDiffeoError):
    pass

"""Exception hierarchy shared by all modules."""


class CqaError(Exception):
    """Base class for every error raised by the package."""


class ConvergenceFailure(CqaError):
    pass


class NotPositiveDefinite(CqaError):
    pass


class NotPositiveSemidefinite(CqaError):
    pass


class InvalidDimensions(CqaError, ValueError):
    pass


class DimensionMismatch(CqaError, ValueError):
    pass


class IndexOutOfRange(CqaError, IndexError):
    pass


class RankDeficiency(CqaError):
    pass


class SearchFailure(CqaError):
    pass


class BudgetExceeded(CqaError, ValueError):
    pass


class NegativePower(CqaError, ValueError):
    pass


class DomainError(CqaError, ValueError):
    pass


class EmptyProblem(CqaError, ValueError):
    pass


class NoFeasibleAllocation(CqaError):
    pass


class NegativeDiscriminant(CqaError):
    """Raised when the water-level quadratic has no real root."""


class ApproximationInvalid(CqaError):
    """The truncated-series rate argument is not positive definite."""


class UnknownKind(CqaError, ValueError):
    pass


class MissingCurve(CqaError, KeyError):
    pass


class ConfigError(CqaError, ValueError):
    pass

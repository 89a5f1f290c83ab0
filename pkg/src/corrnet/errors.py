"""Exception hierarchy shared by every stage of the pipeline."""


class CorrnetError(Exception):
    """Base class for all library errors."""


class DataError(CorrnetError, ValueError):
    """Input data cannot support the requested computation."""


class ParseError(DataError):
    """A CSV cell could not be parsed."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class DataQualityError(DataError):
    """Gaps, leading missing values or duplicate dates in a panel."""


class WindowError(DataError):
    """A window specification produces no windows, or a window failed."""


class ZeroVarianceError(DataError):
    """A series has zero variance where a moment ratio is required."""


UndefinedMomentsError = ZeroVarianceError


class DegenerateSubgroupError(DataError):
    """The low-volatility subgroup covariance of a pair is zero."""


class SizeError(DataError):
    """Too few nodes for the requested construction."""


class MethodError(CorrnetError, ValueError):
    """Operation applied to a network of the wrong kind."""


class EmptyNetworkError(DataError):
    """A network statistic needs at least one edge."""


class SpecError(CorrnetError, ValueError):
    """Invalid ERGM term list or unknown attribute."""


class UndefinedFitError(DataError):
    """Model-fit percentage undefined because the null log-likelihood is zero."""


class NonConvergenceError(CorrnetError, RuntimeError):
    """Estimator hit its iteration cap without converging."""


class UsageError(CorrnetError):
    """Bad command-line arguments."""

"""Exception hierarchy shared by all modules."""


class SysIdError(Exception):
    """Base class for every error raised by rolloutid."""


class InvalidInputError(SysIdError, ValueError):
    pass


class NumericFailureError(SysIdError, ArithmeticError):
    pass


class RankDeficiencyError(NumericFailureError):
    """Raised when a Gram matrix is singular to working precision.

    ``condition`` carries the estimated condition number (``inf`` when the
    smallest singular value is exactly zero).
    """

    def __init__(self, message, condition=float("inf")):
        super().__init__(message)
        self.condition = condition


class UnderExcitationError(RankDeficiencyError):
    """The input data matrix does not excite every Markov parameter.

    ``required`` is the minimum number of independent regression columns
    (``m * T1``) the estimator needs.
    """

    def __init__(self, message, condition=float("inf"), required=None):
        super().__init__(message, condition)
        self.required = required


class InstabilityOverflowError(NumericFailureError):
    def __init__(self, message, time_index):
        super().__init__(message)
        self.time_index = time_index


class InsufficientHorizonError(InvalidInputError):
    pass


class LengthOrderError(InvalidInputError):
    pass


class IncompleteDatasetError(SysIdError):
    pass


class ConvergenceError(NumericFailureError):
    pass


class InstabilityError(InvalidInputError):
    """A stability-only computation was asked to run on an unstable system."""


class CannotRescaleError(InvalidInputError):
    pass


class NotFoundError(SysIdError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""

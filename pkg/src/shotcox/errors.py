"""Exception hierarchy shared by all modules."""


class ShotCoxError(Exception):
    """Base class for errors raised by this package."""


class DomainError(ShotCoxError, ValueError):
    """An argument lies outside the admissible domain of an operation."""


class UnsupportedKernelError(DomainError):
    """The kernel variant does not support the requested operation."""


class NumericalError(ShotCoxError, ArithmeticError):
    """A numerical routine could not reach its accuracy target.

    ``achieved`` carries the best error estimate or bound that was reached.
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class QuadratureError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    pass


class NoiseFloorWarning(UserWarning):
    """A probability was computed below the double-precision noise floor."""

"""Exceptions raised by the numerical routines."""


class CritWindowError(Exception):
    """Base class for all package errors."""


class PrecisionError(CritWindowError, ArithmeticError):
    """A requested tolerance could not be met.

    ``best_bound`` carries the smallest error bound that was achieved.
    """

    def __init__(self, message, best_bound=float("inf"), estimate=None):
        super().__init__(message)
        self.best_bound = best_bound
        self.estimate = estimate


class QuadratureError(PrecisionError):
    """Adaptive quadrature ran out of subdivisions."""


class SeriesError(PrecisionError):
    """An alternating moment series did not bracket its limit tightly enough.

    ``bracket`` is the (lower, upper) pair reached before giving up.
    """

    def __init__(self, message, bracket, best_bound=float("inf"), estimate=None):
        super().__init__(message, best_bound=best_bound, estimate=estimate)
        self.bracket = bracket


class InsufficientSamplesError(CritWindowError):
    """Too few observations for a statistical comparison."""

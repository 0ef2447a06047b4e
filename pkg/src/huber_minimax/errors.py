"""Exceptions raised by the numerical routines."""


class HuberMinimaxError(Exception):
    """Base class for all package errors."""


class NoSolution(HuberMinimaxError):
    """A defining equation has no root in the admissible range."""


class DomainError(HuberMinimaxError, ValueError):
    """Arguments lie outside the domain where the quantity is defined."""


class BracketError(HuberMinimaxError):
    """A minimizer or root could not be bracketed within the search limits."""


class ConvergenceError(HuberMinimaxError):
    """An iteration stopped without meeting its consistency checks."""


class SlopeInfeasible(HuberMinimaxError):
    """The empirical slope equation of AMP has no solution.

    ``iteration`` records the AMP iteration at which it happened.
    """

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class SingularSystem(HuberMinimaxError):
    """Weighted normal equations are rank deficient."""

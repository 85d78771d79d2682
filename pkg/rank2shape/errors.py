"""Exception types raised by rank2shape.

Every error derives from :class:`Rank2ShapeError` and from the builtin exception it refines, so callers can
catch either.
"""

from typing import Optional


class Rank2ShapeError(Exception):
    """Base class of all rank2shape errors"""


class ShapeDomainError(Rank2ShapeError, ValueError):
    """An argument lies outside the mathematical domain of an operation (non-PD matrix, u outside (0,1), ...)"""


class UsageError(Rank2ShapeError, ValueError):
    """An argument is malformed (wrong length, unparseable score string, ...)"""


class DegenerateDataError(Rank2ShapeError, ValueError):
    """The data do not support the requested computation"""

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


class ConvergenceError(Rank2ShapeError, RuntimeError):
    """A fixed-point iteration stopped at max_iter before reaching its tolerance"""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class QuadratureError(Rank2ShapeError, ArithmeticError):
    """Doubling the number of quadrature nodes changed an integral by more than the tolerance"""


class PathExitError(Rank2ShapeError, ArithmeticError):
    """The one-step path V(beta) left the cone of positive definite matrices"""

    def __init__(self, message: str, beta: float):
        super().__init__(message)
        self.beta = beta


class NoCrossingError(Rank2ShapeError, RuntimeError):
    """h_tilde stayed positive up to the hard cap of the beta search"""

    def __init__(self, message: str, cap: float):
        super().__init__(message)
        self.cap = cap


class ConfigError(Rank2ShapeError, ValueError):
    """A simulation configuration could not be parsed or validated"""

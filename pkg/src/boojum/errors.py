"""Exception hierarchy shared by all boojum modules."""

import numpy as np


class BoojumError(Exception):
    """Base class for every error raised by this package."""


class DomainError(BoojumError, ValueError):
    """An argument lies outside the domain of the function."""


class ImproperHyperparametersError(BoojumError):
    """The hyperparameters do not define a normalizable distribution."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ConvergenceError(BoojumError):
    """An iterative routine hit its iteration cap.

    ``last_iterate`` and ``residual`` carry the state at the point of failure.
    """

    def __init__(self, message, last_iterate=None, residual=float("nan")):
        super().__init__(message)
        self.last_iterate = None if last_iterate is None else np.array(last_iterate)
        self.residual = residual


class DivergenceError(ConvergenceError):
    """An iterate escaped towards infinity."""


class ResolutionError(BoojumError):
    """A quadrature result was not stable under grid refinement."""


class CapabilityError(BoojumError):
    """The requested dimension is not supported by this routine."""


class ParseError(BoojumError, ValueError):
    """Malformed input file."""

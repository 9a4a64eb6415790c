"""Exception types raised by phasekit."""

import numpy as np


class PhasekitError(Exception):
    """Base class for all phasekit errors."""


class InvalidArgumentError(PhasekitError, ValueError):
    pass


class DomainError(PhasekitError, ValueError):
    """A point lies outside the domain of an expansion or equation."""


class SingularMatrixError(PhasekitError, np.linalg.LinAlgError):
    pass


class TurningPointError(PhasekitError):
    """Two eigenvalue (or Riccati) branches came together.

    ``location`` is the abscissa at which the collision was detected.
    """

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class DivergenceError(PhasekitError):
    """Newton iteration produced non-finite values."""

    def __init__(self, message, branch=None):
        super().__init__(message)
        self.branch = branch


class BudgetExhaustedError(PhasekitError):
    """The adaptive solver ran out of intervals or bisection depth.

    ``partition`` holds the accepted breakpoints reached before giving up and
    ``location`` the left endpoint of the interval that could not be resolved.
    """

    def __init__(self, message, partition=None, location=None):
        super().__init__(message)
        self.partition = partition
        self.location = location


class PhaseOverflowError(PhasekitError, OverflowError):
    def __init__(self, message, branch=None):
        super().__init__(message)
        self.branch = branch

"""Exception hierarchy shared by the solver pipeline and the CLI."""

from __future__ import annotations


class FracNLSError(Exception):
    """Base class; ``stage`` names the pipeline step that failed."""

    stage = "fracnls"


class DomainError(FracNLSError, ValueError):
    """An argument is outside the mathematical domain of the operation."""

    stage = "input"


class GridMismatchError(FracNLSError, ValueError):
    stage = "grid"


class ConvergenceError(FracNLSError):
    """Newton iteration did not reach the tolerance; carries the residual history."""

    stage = "solve"

    def __init__(self, message, residual_history=()):
        super().__init__(message)
        self.residual_history = list(residual_history)


class TrivialSolutionError(ConvergenceError):
    """The iteration collapsed onto the zero solution."""


class ContinuationError(ConvergenceError):
    stage = "continuation"

    def __init__(self, message, omega, residual_history=()):
        super().__init__(message, residual_history)
        self.omega = omega


class ShapeError(FracNLSError):
    """Profile is not a two-lobe wave; the offending profile is attached."""

    stage = "shape"

    def __init__(self, message, profile=None, n_critical=None):
        super().__init__(message)
        self.profile = profile
        self.n_critical = n_critical


class ParityError(FracNLSError, ValueError):
    stage = "linops"


class NumericalError(FracNLSError):
    """Eigensolver failure or a (near-)singular sector solve."""

    stage = "linops"


class CountInconsistencyError(FracNLSError):
    stage = "krein"

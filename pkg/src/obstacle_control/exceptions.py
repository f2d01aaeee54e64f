"""Exception hierarchy shared by all modules."""


class ObstacleError(Exception):
    """Base class for errors raised by this package."""


class ConfigurationError(ObstacleError, ValueError):
    """Invalid grid, problem or run configuration."""


class InputError(ObstacleError, ValueError):
    """A checker was called outside its precondition domain."""


class InfeasibleConstraintError(ObstacleError, ValueError):
    """The constraint set is empty (negative Dirichlet data under a zero obstacle)."""


class NonConvergenceError(ObstacleError, RuntimeError):
    """An iterative method hit its iteration cap or diverged.

    ``history`` holds the residual (or Rayleigh quotient) sequence so the
    caller can see how far the iteration got.
    """

    def __init__(self, message, history=None, iterate=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []
        self.iterate = iterate


class LineSearchError(ObstacleError, RuntimeError):
    """Armijo backtracking shrank the step below the floor."""

    def __init__(self, message, history=None, step=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []
        self.step = step

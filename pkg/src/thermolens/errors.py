"""Exception hierarchy shared by the solver, the config reader and the CLI."""


class ThermolensError(Exception):
    """Base class for all package errors."""


class ConfigError(ThermolensError):
    """Malformed or invalid configuration.

    ``key`` names the offending ``section.key`` when known, ``lineno`` the
    1-based line of a syntax error.
    """

    def __init__(self, message, key=None, lineno=None):
        super().__init__(message)
        self.key = key
        self.lineno = lineno


class InvalidParameterError(ThermolensError, ValueError):
    """A physical or numerical parameter is outside its admissible range."""


class SolverError(ThermolensError):
    """Mathematical failure while advancing the solution."""


class LinearSolveError(SolverError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class NonConvergenceError(SolverError):
    def __init__(self, max_iter, residual, t=None):
        super().__init__(
            f"fixed-point iteration did not converge in {max_iter} iterations "
            f"(residual {residual:.3e}" + (f", t={t:.6e})" if t is not None else ")")
        )
        self.max_iter = max_iter
        self.residual = residual
        self.t = t


class DegeneracyError(SolverError):
    """``1 - 2 k(theta) p`` dropped below the admissible floor."""

    def __init__(self, min_value, location, floor=None, t=None):
        msg = f"degenerate acoustic coefficient: min(1 - 2k p) = {min_value:.6g} at node {location}"
        if floor is not None:
            msg += f" (floor {floor:g})"
        if t is not None:
            msg += f", t={t:.6e}"
        super().__init__(msg)
        self.min_value = min_value
        self.location = location
        self.floor = floor
        self.t = t

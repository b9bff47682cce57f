"""Exception types raised across the package."""


class VekuaError(Exception):
    """Base class for all package errors."""


class GeometryError(VekuaError, ValueError):
    """Invalid domain, singular point placement or cutoff overlap."""


class PoleError(VekuaError, ZeroDivisionError):
    """Evaluation at a singular point where the weight blows up."""


class NonFiniteError(VekuaError, ValueError):
    """A field contains NaN or inf where finite values are required."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class SolverError(VekuaError, RuntimeError):
    """The integral equation could not be solved to tolerance."""

    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


class SpecError(VekuaError, ValueError):
    """Malformed problem specification."""


class ExpressionError(VekuaError, ValueError):
    """Syntax or evaluation error in a coefficient expression."""

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column

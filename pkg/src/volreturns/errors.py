"""Exception hierarchy shared by the library and the CLI.

Each error class carries the process exit code the CLI uses for it.
"""


class VolReturnsError(Exception):
    exit_code = 1


class ValidationError(VolReturnsError, ValueError):
    """Input violates a documented precondition."""

    exit_code = 3


class ParseError(ValidationError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InsufficientDataError(ValidationError):
    pass


class DomainError(ValidationError):
    pass


class StabilityError(ValidationError):
    """Time step too coarse for the Euler scheme."""


class MomentDoesNotExistError(ValidationError):
    pass


class FitError(ValidationError):
    """Sample cannot be fitted (degenerate or too small)."""


class NumericalError(VolReturnsError, ArithmeticError):
    """Quadrature, optimizer or special-function failure."""

    exit_code = 4

    def __init__(self, message, achieved=None):
        self.achieved = achieved
        if achieved is not None:
            message = f"{message} (achieved error estimate {achieved:.3g})"
        super().__init__(message)

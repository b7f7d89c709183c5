"""Exception types raised by psrcal."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, estimate=None, abserr=None):
        super().__init__(message)
        self.estimate = estimate
        self.abserr = abserr


class DegenerateInputError(ValueError):
    """Training data cannot identify the model (e.g. constant scores)."""


class TrialFileError(ValueError):
    """A trial, model or knot file could not be parsed."""

    def __init__(self, message, path=None, lineno=None):
        where = ""
        if path is not None:
            where += f"{path}: "
        if lineno is not None:
            where += f"line {lineno}: "
        super().__init__(where + message)
        self.path = path
        self.lineno = lineno

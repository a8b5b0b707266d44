"""Exception hierarchy shared by all fraktal modules."""


class FraktalError(Exception):
    """Base class for every error raised by the toolkit."""


class ValidationError(FraktalError, ValueError):
    """Invalid input parameters or malformed data."""


class ResourceLimitError(FraktalError):
    """A request exceeds a configured size cap (e.g. prefractal level)."""


class DomainError(FraktalError, ValueError):
    """A value lies outside the mathematical domain of an operation."""


class RangeError(FraktalError, ValueError):
    """An integration window does not fit inside the sampled grid."""


class ModeError(FraktalError, ValueError):
    """The requested quadrature or coefficient mode cannot handle the input."""


class InsufficientResolutionError(FraktalError):
    """No admissible sample point was found within the F-limit neighbourhood."""


class DivergentQuotientError(FraktalError, ArithmeticError):
    """Difference quotient with zero denominator and nonzero numerator."""


class ConvergenceError(FraktalError):
    """Iterative solver did not converge; ``best`` carries the best iterate."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best

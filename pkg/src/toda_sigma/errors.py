"""Exception types shared across the package."""


class TodaSigmaError(Exception):
    """Base class for all package errors."""


class AmbiguousSign(TodaSigmaError, ArithmeticError):
    """The sign of a value could not be certified at the maximum precision."""


class NegativeRadicand(TodaSigmaError, ValueError):
    """Square root requested of a value certified negative."""


class DivisionByZero(TodaSigmaError, ZeroDivisionError):
    """Division by a value that is exactly zero."""


class ClosureBudgetExceeded(TodaSigmaError, RuntimeError):
    """The worklist closure did not reach a fixed point within its step budget."""


class NonConvergence(TodaSigmaError, RuntimeError):
    """Adaptive step size underflowed during integration."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class IntegrationOverflow(TodaSigmaError, OverflowError):
    """A component left the representable exponent range (solution not continuable)."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t

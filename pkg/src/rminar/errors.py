"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class RminarError(Exception):
    """Base class for all package errors."""


class InvalidInput(RminarError, ValueError):
    """Malformed user input (bad spec, bad config, bad series)."""


class InvalidSpec(InvalidInput):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class ParseError(InvalidInput):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class TooShort(InvalidInput):
    pass


class NegativeOperand(InvalidInput):
    pass


class NumericalError(RminarError, ArithmeticError):
    """Failures of the numerical machinery (CLI exit code 3)."""


class SingularMatrix(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class Diverges(NumericalError):
    pass


class Overflow(NumericalError, OverflowError):
    pass


class NotSupported(RminarError, NotImplementedError):
    pass


class DegenerateTail(NumericalError):
    pass


class ZeroVariance(NumericalError):
    pass


class NumericalBreakdown(NumericalError):
    pass


class NonpositiveVariance(NumericalError):
    def __init__(self, index: int, value: float):
        self.index = index
        self.value = value
        super().__init__(f"non-positive conditional variance {value!r} at t={index}")


class InnerOptFailed(NumericalError):
    pass

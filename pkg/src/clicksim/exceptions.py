"""Exception hierarchy shared by every module of the package."""


class ClickSimError(Exception):
    """Base class for all domain errors raised by clicksim."""


class ValidationError(ClickSimError, ValueError):
    pass


class NotSquare(ValidationError):
    pass


class NotHermitian(ValidationError):
    pass


class NotPSD(ValidationError):
    pass


class ZeroTrace(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class FactorMismatch(ValidationError):
    """A user-supplied factor C does not reproduce the covariance (CC* != B)."""


class ParseError(ClickSimError):
    """Malformed configuration; ``field`` and ``line`` locate the problem."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class NoClicks(ClickSimError):
    pass


class InsufficientClicks(ClickSimError):
    pass


class WrongChannelCount(ClickSimError, ValueError):
    pass


class DivisionByZero(ClickSimError, ZeroDivisionError):
    pass


class MaxStepsExceeded(ClickSimError, RuntimeError):
    pass

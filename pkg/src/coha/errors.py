"""Exception hierarchy shared by all coha modules."""


class CohaError(Exception):
    """Base class for every error raised by coha."""


class QuiverError(CohaError, ValueError):
    pass


class GradingError(CohaError, ValueError):
    pass


class KernelMismatch(CohaError, ValueError):
    pass


class ShapeMismatch(CohaError, ValueError):
    pass


class DenominatorVanishes(CohaError, ZeroDivisionError):
    pass


class ParseError(CohaError, ValueError):
    def __init__(self, message: str, text: str = "", position: int = 0):
        self.text = text
        self.position = position
        if text:
            message = f"{message} at position {position}: {text!r}"
        super().__init__(message)


class UnboundVariable(CohaError, KeyError):
    def __init__(self, names):
        self.names = tuple(sorted(names))
        super().__init__("unbound variable(s): " + ", ".join(self.names))

    def __str__(self):
        return self.args[0]


class NumericError(CohaError, ArithmeticError):
    """Numeric instability: pole proximity or unreachable precision."""


class PoleError(NumericError):
    pass


class PrecisionError(NumericError):
    pass


class SamplingError(NumericError):
    pass

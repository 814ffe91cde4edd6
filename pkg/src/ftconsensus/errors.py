"""Exception hierarchy shared by all modules."""


class FtcError(Exception):
    """Base class for every error raised by ftconsensus."""


class InvalidEdge(FtcError, ValueError):
    pass


class DisconnectedGraph(FtcError, ValueError):
    pass


class NotSymmetric(FtcError, ValueError):
    pass


class DimensionMismatch(FtcError, ValueError):
    pass


class NoBasisDeclared(FtcError, ValueError):
    pass


class EmptyFaultClass(FtcError, ValueError):
    pass


class DegenerateDenominator(FtcError, ArithmeticError):
    """Raised when ``1 + theta_hat`` is no longer strictly positive."""


class UnknownFunction(FtcError, KeyError):
    pass


class ParseError(FtcError):
    pass


class ValidationError(FtcError, ValueError):
    """Scenario validation failure; ``key`` holds the dotted key path."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")

class CstarError(Exception):
    """Base class for package errors."""


class DomainError(CstarError, ValueError):
    """Input outside the domain of the operation (for example ``z = 0``)."""


class MapOverflow(CstarError, ArithmeticError):
    """The value of the map leaves double range.

    ``kind`` is ``"overflow"`` or ``"underflow"``; ``log_modulus`` carries the
    (finite or signed-infinite) logarithm of the modulus so callers can switch
    to log-coordinate bookkeeping.
    """

    def __init__(self, kind, log_modulus):
        super().__init__(f"|f| {kind}: log|f| = {log_modulus!r}")
        self.kind = kind
        self.log_modulus = log_modulus


class ResolutionTooCoarse(CstarError):
    def __init__(self, message, cells=None):
        super().__init__(message)
        self.cells = cells or []


class GeometryMismatch(CstarError, ValueError):
    pass


class EmptyChannelSample(CstarError):
    pass


class NoPointFound(CstarError):
    pass


class UnknownFixture(CstarError, KeyError):
    pass

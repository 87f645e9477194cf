"""Exception hierarchy for ts-lens.

Every domain failure derives from TsLensError. Argument problems also derive from
ValueError, file problems from OSError.
"""


class TsLensError(Exception):
    """Base class for all ts-lens errors."""


class InvalidConfigError(TsLensError, ValueError):
    pass


class ShapeMismatchError(TsLensError, ValueError):
    pass


class NonConvergenceError(TsLensError, ArithmeticError):
    pass


class SingularSystemError(TsLensError, ArithmeticError):
    pass


class InvalidPeriodError(TsLensError, ValueError):
    pass


class NotFittedError(TsLensError, RuntimeError):
    pass


class DegenerateRepresentationError(TsLensError, ValueError):
    pass


class ZeroVectorError(TsLensError, ValueError):
    pass


class SampleMismatchError(TsLensError, ValueError):
    pass


class NotSquareError(TsLensError, ValueError):
    pass


class BlockOutOfRangeError(TsLensError, ValueError):
    pass


class DegenerateClassesError(TsLensError, ValueError):
    pass


class ModelMismatchError(TsLensError, ValueError):
    """Artifacts derived from different models (or datasets) were combined."""

    def __init__(self, message: str, expected: str | None = None, actual: str | None = None):
        super().__init__(message)
        self.expected = expected
        self.actual = actual


class EmptyClassError(TsLensError, ValueError):
    pass


class TokenOutOfRangeError(TsLensError, IndexError):
    pass


class IoFailureError(TsLensError, OSError):
    pass


class BadMagicError(IoFailureError):
    pass


class TruncatedPayloadError(IoFailureError):
    pass

"""Error types shared across the package."""


class PrecisionError(ArithmeticError):
    """A truncated Laurent value cannot answer the question asked of it.

    Raised when cancellation has consumed the tracked coefficient window of a
    non-exact value, so the result is indistinguishable from zero at the
    working precision, or when a computation needs coefficients below the
    tracked window.
    """


class FieldMismatchError(ValueError):
    """Operands belong to different field specifications."""

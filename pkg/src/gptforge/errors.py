"""Exception hierarchy shared across gptforge."""

from __future__ import annotations


class GptError(Exception):
    """Base class for all gptforge errors."""


class DimensionMismatch(GptError, ValueError):
    pass


class SystemMismatch(GptError, ValueError):
    pass


class CompositeNotRegistered(GptError, KeyError):
    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class SingularMatrixError(GptError, ValueError):
    """Raised when a matrix that must be invertible is not.

    ``rank`` and ``expected`` carry the numerical rank found and the rank
    required, when known.
    """

    def __init__(self, message: str, rank: int | None = None, expected: int | None = None):
        super().__init__(message)
        self.rank = rank
        self.expected = expected


class IllConditionedError(SingularMatrixError):
    pass


class QuotientError(GptError, ValueError):
    pass


class FrameError(GptError, ValueError):
    pass


class EmbeddingError(GptError, RuntimeError):
    pass

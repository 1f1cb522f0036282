"""Exception hierarchy shared by the numerical modules and the CLI programs."""

from collections.abc import Sequence
from typing import Any


class DiracError(Exception):
    """Base class of every error raised by diracutils."""


class InvalidArgumentError(DiracError, ValueError):
    """Operands do not satisfy a precondition (grid mismatch, bad window, ...)."""


class UnsupportedOperationError(DiracError, NotImplementedError):
    """The requested operation has no grid-function counterpart."""


class NumericRangeError(DiracError, ArithmeticError):
    def __init__(self, msg: str, lam: Any = None) -> None:
        super().__init__(msg)
        self.lam = lam


class EigenvalueSearchError(DiracError, RuntimeError):
    def __init__(self, msg: str, box: tuple[float, float, float, float]) -> None:
        super().__init__(msg)
        self.box = box


class ConditioningError(DiracError, ArithmeticError):
    def __init__(self, msg: str, condition: float) -> None:
        super().__init__(msg)
        self.condition = condition


class InconsistentDataError(DiracError, ValueError):
    def __init__(self, msg: str, residual: float) -> None:
        super().__init__(msg)
        self.residual = residual


class ConvergenceError(DiracError, RuntimeError):
    def __init__(self, msg: str, history: Sequence[float]) -> None:
        super().__init__(msg)
        self.history = list(history)


class StageError(DiracError):
    """An error raised inside one stage of the partial inverse reconstruction.

    The original exception is available as ``__cause__``.
    """

    def __init__(self, stage: str, cause: DiracError) -> None:
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause

from __future__ import annotations

from typing import Any


class QuditBellError(Exception):
    """Base for all quditbell exceptions."""


class InvalidInputError(QuditBellError, ValueError):
    """Argument outside the range an operation accepts."""


class DimensionMismatchError(QuditBellError):
    """Operands of incompatible shape."""

    def __init__(self, message: str, operation: str, expected: Any = None, actual: Any = None):
        self.operation = operation
        self.expected = expected
        self.actual = actual
        super().__init__(message)


class InvalidOperatorError(QuditBellError):
    """Basis or projector family violates its invariants."""


class InvalidDistributionError(QuditBellError):
    """Probability table is negative or not normalized."""


class InvalidStateError(QuditBellError):
    """Density operator failed validation."""

    def __init__(self, message: str, report: Any):
        self.report = report
        super().__init__(message)


class ImpossibleOutcomeError(QuditBellError):
    """Post-measurement state requested for a zero-probability branch."""

    def __init__(self, message: str, probability: float):
        self.probability = probability
        super().__init__(message)


class ConsistencyError(QuditBellError):
    """Two evaluation routes that must agree did not."""

    def __init__(self, message: str, check: str, discrepancy: float | None = None):
        self.check = check
        self.discrepancy = discrepancy
        super().__init__(message)


class SignalingError(QuditBellError):
    """Locality test requested for a behavior that signals."""

    def __init__(self, message: str, report: Any):
        self.report = report
        super().__init__(message)


class LpInconclusiveError(QuditBellError):
    """LP solver stopped without an optimal answer."""

    def __init__(self, message: str, status: str, iterations: int):
        self.status = status
        self.iterations = iterations
        super().__init__(message)


class ConfigValidationError(QuditBellError):
    """Run configuration rejected before any computation."""

    def __init__(self, message: str, field: str):
        self.field = field
        super().__init__(message)


class BehaviorFileError(QuditBellError):
    """Behavior file could not be parsed or failed its schema."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None, column: int | None = None):
        self.field = field
        self.line = line
        self.column = column
        super().__init__(message)

    def diagnostic(self) -> str:
        parts = [str(self)]
        if self.field:
            parts.append(f"field={self.field}")
        if self.line is not None:
            parts.append(f"line={self.line}")
        if self.column is not None:
            parts.append(f"column={self.column}")
        return " | ".join(parts)

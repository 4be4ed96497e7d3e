"""Exception hierarchy shared by every qbcsim layer."""

from __future__ import annotations


class QbcError(Exception):
    """Base class for all qbcsim errors."""


class ShapeError(QbcError, ValueError):
    """Operand dimensions do not agree."""


class DomainError(QbcError, ValueError):
    """An argument violates a mathematical precondition (norm, unitarity, ...)."""


class CapacityError(QbcError, MemoryError):
    """A composite system would exceed the configured maximum dimension."""


class UnknownLabelError(QbcError, LookupError):
    """A subsystem or record label is unknown, or a fresh label collides."""


class ConsistencyError(QbcError, RuntimeError):
    """A built-in fixture failed one of its own self-checks."""


class ScriptError(QbcError):
    """Problem in protocol script source, with an optional source position."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.message = message
        self.line = line
        self.column = column
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "")
            message = f"{where}: {message}"
        super().__init__(message)


class OwnershipError(ScriptError):
    """A party touched a subsystem it does not hold."""


class ExecutionError(QbcError, RuntimeError):
    """Runtime failure while executing a protocol step."""

    def __init__(self, message: str, step: int | None = None):
        self.step = step
        if step is not None:
            message = f"step {step}: {message}"
        super().__init__(message)

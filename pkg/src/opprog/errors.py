"""Exception hierarchy shared across the package."""
from __future__ import annotations


class OpProgError(Exception):
    """Base class for all errors raised by this package."""


class ProgramSyntaxError(OpProgError):
    """Malformed program text. Carries the character position of the failure."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position
        self.reason = message


class UnknownArgForm(ProgramSyntaxError):
    """An argument token that matches no reference or literal form."""


class FormatError(OpProgError):
    """Malformed registry, constant, lexicon, dataset or beam document."""

    def __init__(self, message: str, *, source: str | None = None, index: int | None = None):
        parts = [message]
        if source is not None:
            parts.append(f"source={source}")
        if index is not None:
            parts.append(f"record={index}")
        super().__init__("; ".join(parts))
        self.source = source
        self.index = index


class EvalError(OpProgError):
    """Failure while executing a program."""


class InvalidReference(EvalError):
    """An argument reference that cannot be resolved (bad index, forward step)."""


class UnknownConstant(EvalError):
    """A non-decimal constant name missing from the constant table."""


class UnknownOperation(EvalError):
    """An operation name that the registry does not define."""


class DomainViolation(Exception):
    """Internal signal raised by evaluation rules; wrapped into DomainError."""


class DomainError(EvalError):
    """Numerically invalid operation (zero division, sqrt of negative, ...)."""

    def __init__(self, step: int, message: str):
        super().__init__(f"step {step}: {message}")
        self.step = step
        self.reason = message


class SearchBudgetExceeded(OpProgError):
    """A search exceeded its configured state or pair budget."""

"""Diagnostics and error types shared across the frontend, kernel and interpreter."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class Diagnostic:
    """One compiler message in file:line:col: severity: message form."""

    file: str
    line: int
    col: int
    severity: str  # "error" or "warning"
    message: str

    def format(self) -> str:
        return f"{self.file}:{self.line}:{self.col}: {self.severity}: {self.message}"

    def __str__(self) -> str:
        return self.format()


class CompileError(Exception):
    """Raised when a chunk cannot be compiled. Carries the diagnostics."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(d.format() for d in self.diagnostics))


class TxnError(Exception):
    """Transaction lifecycle misuse: bad tag, bad state, rejected merge."""


class HierarchyViolation(TxnError):
    """A superclass chain under some view no longer reaches the top class."""


class StaleTagError(TxnError):
    """Operation referenced a tag the registry no longer knows."""


# Runtime error kinds, recorded on error events and on suspended processes.
DOES_NOT_UNDERSTAND = "does-not-understand"
NON_BOOLEAN_RECEIVER = "non-boolean-receiver"
BLOCK_CANNOT_RETURN = "block-cannot-return"
ASSERTION_FAILED = "assertion-failed"
PRIMITIVE_FAILED = "primitive-failed"


@dataclass
class LiveError(Exception):
    """Unhandled in-language error. Unwinds the whole process; never crosses it."""

    kind: str
    message: str
    selector: str | None = None
    receiver_class: str | None = None
    nil_state: bool = field(default=False)

    def __str__(self) -> str:
        return f"{self.kind}: {self.message}"

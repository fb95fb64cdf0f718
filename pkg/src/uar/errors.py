"""Exception types shared across the package."""

from __future__ import annotations


class UarError(Exception):
    """Base class for all package-specific errors."""


class NonNormalForm(UarError):
    """A grounding count depends on the binding of excluded variables."""


class BudgetExceeded(UarError):
    """A solver budget (assignment space or table memory) was exceeded."""

    def __init__(self, what: str, required: int, budget: int):
        super().__init__(f"{what}: requires {required}, budget is {budget}")
        self.what = what
        self.required = required
        self.budget = budget


class FixpointBudgetExceeded(UarError):
    """Shattering failed to stabilize within the split budget."""


class ConsistencyFailure(UarError):
    """An internal cross-check (recomputed weight vs. reported weight) failed."""


class UnsupportedShape(UarError):
    """The model does not match the shape a specialized solver requires."""


class ValidationError(UarError):
    """A model failed validation; carries the offending report."""

    def __init__(self, report):
        super().__init__("model validation failed:\n" + str(report))
        self.report = report


class ParseError(UarError):
    """Model-file syntax or resolution error with source position."""

    def __init__(self, message: str, line: int, col: int = 1):
        super().__init__(f"line {line}, col {col}: {message}")
        self.message = message
        self.line = line
        self.col = col

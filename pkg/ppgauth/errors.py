"""
Error types
───────────
Everything raised on purpose by the pipeline derives from PpgAuthError.
Input problems also derive from ValueError so callers that only know the
standard library still catch them.
"""
from __future__ import annotations

from pathlib import Path


class PpgAuthError(Exception):
    """Base class for pipeline errors."""


class InvalidInput(PpgAuthError, ValueError):
    """An operation was given data that violates its preconditions."""


class ParseError(InvalidInput):
    """A file could not be parsed. `line` is 1-based when known."""

    def __init__(self, message: str, path: str | Path | None = None, line: int | None = None):
        self.path = str(path) if path is not None else None
        self.line = line
        where = ""
        if self.path:
            where = self.path + (f":{line}" if line is not None else "")
        elif line is not None:
            where = f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class DegenerateBeat(InvalidInput):
    """A beat has no amplitude range, so it cannot be normalized."""


class SelectionEmpty(PpgAuthError):
    """The mRMR and RMI selections share no feature."""

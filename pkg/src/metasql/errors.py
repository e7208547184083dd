"""Exception types shared across the package."""
from __future__ import annotations


class MetasqlError(Exception):
    """Base class for all package-specific failures."""


class SqlParseError(MetasqlError):
    """Raised when a statement cannot be parsed.

    Carries the 1-based source position so callers can point at the
    offending token.
    """

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        if line:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class UnsupportedConstructError(MetasqlError):
    """A statement parsed but uses a construct the dialect rules cannot
    translate; the message names the construct."""


class ExecutionError(MetasqlError):
    """Raised when the engine rejects or fails a statement. The message is
    what flows back into the retry prompt, verbatim."""


class CassetteMissError(MetasqlError):
    """Replay backend got a prompt it has no recording for."""


class ScriptExhaustedError(MetasqlError):
    """Scripted backend ran out of queued completions: a test-harness bug."""


class AuditLogError(MetasqlError):
    """The audit log could not be written; auditing is mandatory, so this
    aborts the request rather than degrading silently."""


class DatasetError(MetasqlError):
    """A demo or dataset record failed validation; names the record."""


class ExtractionError(MetasqlError):
    """No usable SQL block in a completion."""

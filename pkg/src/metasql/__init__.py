"""Schema-grounded question answering over embedded analytical databases.

The package turns a natural-language question into an executable SELECT:
a prompt is assembled from the database schema and retrieved few-shot
demonstrations, a model completion is parsed for a fenced SQL block, the
statement is checked against the catalog and executed, and failures feed
one corrected retry before the system abstains.  A standalone dialect
translator and an evaluation harness ride along.
"""
from .errors import (AuditLogError, CassetteMissError, DatasetError,
                     ExecutionError, ExtractionError, MetasqlError,
                     ScriptExhaustedError, SqlParseError,
                     UnsupportedConstructError)

__version__ = "0.1.0"

__all__ = [
    "AuditLogError",
    "CassetteMissError",
    "DatasetError",
    "ExecutionError",
    "ExtractionError",
    "MetasqlError",
    "ScriptExhaustedError",
    "SqlParseError",
    "UnsupportedConstructError",
    "__version__",
]

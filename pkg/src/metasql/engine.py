"""Embedded analytical database.

A Database wraps a sqlite storage file behind a target-dialect frontend:
statements are parsed by the package's own parser, lowered onto Python
UDFs for the datetime constructs sqlite lacks, and executed read-only
with wall-clock and row-cap limits. A separate source-dialect entry
point executes raw sqlite semantics; the differential tests compare the
two sides, so the UDFs here deliberately reproduce sqlite's overflow
normalization (Jan 31 + 1 month rolls into March) rather than clamping.
"""
from __future__ import annotations

import datetime as _dt
import re
import sqlite3
import threading
import time
from dataclasses import dataclass, field

from .errors import ExecutionError
from .sqlkit.lower import lower_tree
from .sqlkit.parser import parse_sql
from .sqlkit.render import render_sql

DEFAULT_TIMEOUT_S = 30.0
DEFAULT_MAX_ROWS = 100_000

_TS_RE = re.compile(
    r"^(\d{4})-(\d{2})-(\d{2})"
    r"(?:[ T](\d{2}):(\d{2})(?::(\d{2})(?:\.(\d+))?)?)?$")


def _parse_ts(value) -> _dt.datetime | None:
    if not isinstance(value, str):
        return None
    m = _TS_RE.match(value.strip())
    if m is None:
        return None
    y, mo, d, h, mi, s, _frac = m.groups()
    try:
        return _dt.datetime(int(y), int(mo), int(d),
                            int(h or 0), int(mi or 0), int(s or 0))
    except ValueError:
        return None


def _render_ts(dt: _dt.datetime) -> str:
    return dt.strftime("%Y-%m-%d %H:%M:%S")


def parse_timestamp(value) -> _dt.datetime | None:
    """Parse timestamp- or date-shaped text ('YYYY-MM-DD[ HH:MM[:SS]]',
    T separator tolerated); None for anything else."""
    return _parse_ts(value)


def ts_cast(value):
    """CAST(x AS TIMESTAMP): canonical 'YYYY-MM-DD HH:MM:SS' text, second
    precision, NULL for anything unparseable."""
    dt = _parse_ts(value)
    return None if dt is None else _render_ts(dt)


def date_cast(value):
    dt = _parse_ts(value)
    return None if dt is None else dt.strftime("%Y-%m-%d")


def ts_offset(value, count, unit):
    """x +/- INTERVAL 'count unit' with overflow normalization: month and
    year steps keep the day-of-month and roll any excess into the next
    month, matching the source engine's arithmetic byte for byte."""
    dt = _parse_ts(value)
    if dt is None or count is None:
        return None
    try:
        if unit in ("year", "month"):
            months = count * 12 if unit == "year" else count
            m_index = (dt.month - 1) + months
            year = dt.year + m_index // 12
            month = m_index % 12 + 1
            base = _dt.datetime(year, month, 1, dt.hour, dt.minute, dt.second)
            dt = base + _dt.timedelta(days=dt.day - 1)
        else:
            step = {"day": _dt.timedelta(days=1),
                    "hour": _dt.timedelta(hours=1),
                    "minute": _dt.timedelta(minutes=1),
                    "second": _dt.timedelta(seconds=1)}[unit]
            dt = dt + step * count
    except (ValueError, OverflowError, KeyError):
        return None
    return _render_ts(dt)


def date_trunc(part, value):
    dt = _parse_ts(value)
    if dt is None:
        return None
    part = (part or "").lower()
    if part == "year":
        dt = dt.replace(month=1, day=1, hour=0, minute=0, second=0)
    elif part == "month":
        dt = dt.replace(day=1, hour=0, minute=0, second=0)
    elif part == "day":
        dt = dt.replace(hour=0, minute=0, second=0)
    else:
        return None
    return _render_ts(dt)


def ts_strftime(value, fmt):
    """STRFTIME(x, fmt), value first. Supports the directive set both
    dialects share; unknown directives yield NULL like a bad timestring."""
    dt = _parse_ts(value)
    if dt is None or not isinstance(fmt, str):
        return None
    out = []
    i = 0
    while i < len(fmt):
        ch = fmt[i]
        if ch != "%":
            out.append(ch)
            i += 1
            continue
        if i + 1 >= len(fmt):
            return None
        d = fmt[i + 1]
        i += 2
        if d == "Y":
            out.append(f"{dt.year:04d}")
        elif d == "m":
            out.append(f"{dt.month:02d}")
        elif d == "d":
            out.append(f"{dt.day:02d}")
        elif d == "H":
            out.append(f"{dt.hour:02d}")
        elif d == "M":
            out.append(f"{dt.minute:02d}")
        elif d == "S":
            out.append(f"{dt.second:02d}")
        elif d == "j":
            out.append(f"{dt.timetuple().tm_yday:03d}")
        elif d == "w":
            out.append(str(dt.isoweekday() % 7))
        elif d == "f":
            out.append(f"{dt.second:02d}.000")
        elif d == "s":
            epoch = _dt.datetime(1970, 1, 1)
            out.append(str(int((dt - epoch).total_seconds())))
        elif d == "%":
            out.append("%")
        else:
            return None
    return "".join(out)


def datediff(part, start, end):
    """DATEDIFF(part, start, end): boundary crossings between the two
    timestamps, truncated to the part."""
    a = _parse_ts(start)
    b = _parse_ts(end)
    if a is None or b is None:
        return None
    part = (part or "").lower().rstrip("s")
    if part == "year":
        return b.year - a.year
    if part == "month":
        return (b.year - a.year) * 12 + (b.month - a.month)
    if part == "day":
        return (b.date() - a.date()).days
    seconds = int((b.replace(microsecond=0) - a.replace(microsecond=0))
                  .total_seconds())
    if part == "hour":
        return (b.replace(minute=0, second=0) - a.replace(minute=0, second=0)) \
            // _dt.timedelta(hours=1)
    if part == "minute":
        return (b.replace(second=0) - a.replace(second=0)) \
            // _dt.timedelta(minutes=1)
    if part == "second":
        return seconds
    return None


def _ts_part(value, attr):
    dt = _parse_ts(value)
    return None if dt is None else getattr(dt, attr)


def _register_udfs(conn: sqlite3.Connection) -> None:
    conn.create_function("TS_CAST", 1, ts_cast, deterministic=True)
    conn.create_function("DATE_CAST", 1, date_cast, deterministic=True)
    conn.create_function("TS_OFFSET", 3, ts_offset, deterministic=True)
    conn.create_function("DATE_TRUNC", 2, date_trunc, deterministic=True)
    conn.create_function("TS_STRFTIME", 2, ts_strftime, deterministic=True)
    conn.create_function("DATEDIFF", 3, datediff, deterministic=True)
    conn.create_function("TS_YEAR", 1, lambda v: _ts_part(v, "year"),
                         deterministic=True)
    conn.create_function("TS_MONTH", 1, lambda v: _ts_part(v, "month"),
                         deterministic=True)
    conn.create_function("TS_DAY", 1, lambda v: _ts_part(v, "day"),
                         deterministic=True)


@dataclass
class QueryResult:
    """Rows plus ordered (name, type) column descriptors. Types are
    inferred from the returned values; all-null or empty columns report
    UNKNOWN."""
    columns: list[tuple[str, str]] = field(default_factory=list)
    rows: list[tuple] = field(default_factory=list)

    @property
    def column_names(self) -> list[str]:
        return [name for name, _ in self.columns]

    @property
    def n_rows(self) -> int:
        return len(self.rows)


def _infer_type(values) -> str:
    kinds = {type(v) for v in values if v is not None}
    if not kinds:
        return "UNKNOWN"
    if kinds <= {int, bool}:
        return "INTEGER"
    if kinds <= {int, float, bool}:
        return "REAL"
    if kinds == {str}:
        return "TEXT"
    if kinds == {bytes}:
        return "BLOB"
    return "MIXED"


class Database:
    """Read-only analytical database over a sqlite storage file.

    Writable handles exist only for in-memory fixtures created through
    :meth:`memory`; file-backed databases always open with mode=ro and
    every query additionally runs under PRAGMA query_only.
    """

    def __init__(self, path: str, *, _conn: sqlite3.Connection | None = None):
        self.path = path
        # one connection shared across server worker threads; _lock
        # serializes access since sqlite handles are not thread safe
        self._lock = threading.RLock()
        if _conn is not None:
            self._conn = _conn
            self._writable = True
        else:
            uri = f"file:{path}?mode=ro"
            try:
                self._conn = sqlite3.connect(uri, uri=True,
                                             check_same_thread=False)
            except sqlite3.OperationalError as exc:
                raise ExecutionError(f"cannot open database {path}: {exc}") from exc
            self._writable = False
            self._conn.execute("PRAGMA query_only=ON")
        _register_udfs(self._conn)

    @classmethod
    def memory(cls) -> "Database":
        return cls(":memory:",
                   _conn=sqlite3.connect(":memory:", check_same_thread=False))

    def run_script(self, script: str) -> None:
        """Seed a fixture database. Only valid on in-memory handles."""
        if not self._writable:
            raise ExecutionError("database is read-only")
        with self._lock:
            self._conn.executescript(script)
            self._conn.commit()

    def close(self) -> None:
        self._conn.close()

    # -- execution ---------------------------------------------------------

    def execute(self, sql: str, *, timeout_s: float = DEFAULT_TIMEOUT_S,
                max_rows: int = DEFAULT_MAX_ROWS) -> QueryResult:
        """Run one target-dialect SELECT and return its result.

        Raises ExecutionError on parse failure, dialect violations,
        engine errors, or exceeded limits; messages are retry-prompt
        ready.
        """
        try:
            tree = parse_sql(sql, dialect="target")
        except Exception as exc:
            raise ExecutionError(str(exc)) from exc
        lowered = render_sql(lower_tree(tree))
        return self._run(lowered, timeout_s, max_rows)

    def execute_source(self, sql: str, *, timeout_s: float = DEFAULT_TIMEOUT_S,
                       max_rows: int = DEFAULT_MAX_ROWS) -> QueryResult:
        """Run one source-dialect SELECT with sqlite's native semantics.

        Exists for the differential harness and for executing benchmark
        statements written in the source dialect; the statement still
        must parse as a single SELECT.
        """
        try:
            parse_sql(sql, dialect="source")
        except Exception as exc:
            raise ExecutionError(str(exc)) from exc
        return self._run(sql, timeout_s, max_rows)

    def _run(self, sql: str, timeout_s: float, max_rows: int) -> QueryResult:
        with self._lock:
            return self._run_locked(sql, timeout_s, max_rows)

    def _run_locked(self, sql: str, timeout_s: float, max_rows: int) -> QueryResult:
        conn = self._conn
        deadline = time.monotonic() + timeout_s
        conn.set_progress_handler(
            lambda: 1 if time.monotonic() > deadline else 0, 10_000)
        if self._writable:
            conn.execute("PRAGMA query_only=ON")
        try:
            cursor = conn.execute(sql)
            rows = cursor.fetchmany(max_rows + 1)
        except sqlite3.OperationalError as exc:
            if "interrupted" in str(exc):
                raise ExecutionError(
                    f"timeout exceeded: query ran longer than {timeout_s}s") from exc
            raise ExecutionError(str(exc)) from exc
        except sqlite3.Error as exc:
            raise ExecutionError(str(exc)) from exc
        finally:
            conn.set_progress_handler(None, 0)
            if self._writable:
                conn.execute("PRAGMA query_only=OFF")
        if len(rows) > max_rows:
            raise ExecutionError(
                f"row cap exceeded: query produced more than {max_rows} rows")
        names = [d[0] for d in cursor.description or []]
        columns = [(name, _infer_type([row[i] for row in rows]))
                   for i, name in enumerate(names)]
        return QueryResult(columns=columns, rows=[tuple(r) for r in rows])

    # -- trusted introspection ----------------------------------------------

    def pragma_rows(self, pragma_sql: str) -> list[tuple]:
        """Internal hook for schema introspection; not reachable from
        user-supplied SQL."""
        with self._lock:
            return [tuple(r) for r in self._conn.execute(pragma_sql).fetchall()]

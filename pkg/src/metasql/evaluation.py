"""Evaluation harness: result equality, reliability scoring, dataset
preparation.

Result comparison is deliberately forgiving about presentation and
strict about substance: column names are ignored, row order is ignored
unless asked for, numeric types unify, timestamps canonicalize, strings
lose trailing whitespace. Reals compare within tolerance at match time,
so values straddling a sort boundary inside tolerance can in principle
misalign; the tolerances are orders of magnitude below the data grids
this is used on.
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .engine import Database, QueryResult, parse_timestamp
from .errors import DatasetError, ExecutionError, UnsupportedConstructError
from .sqlkit.transpile import transpile

REL_TOL = 1e-6
ABS_TOL = 1e-9


def normalize_value(value):
    """Canonical atom: numerics as numbers, timestamp-shaped strings in
    'YYYY-MM-DD HH:MM:SS' form, other strings with trailing whitespace
    trimmed. None stays None; absent is not the text 'NULL'."""
    if value is None:
        return None
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, (int, float)):
        return value
    if isinstance(value, str):
        dt = parse_timestamp(value)
        if dt is not None:
            return dt.strftime("%Y-%m-%d %H:%M:%S")
        return value.rstrip()
    return value


def normalize_row(row: Sequence) -> tuple:
    return tuple(normalize_value(v) for v in row)


def _sort_key(row: tuple) -> tuple:
    key = []
    for v in row:
        if v is None:
            key.append((0, 0.0, ""))
        elif isinstance(v, (int, float)):
            key.append((1, float(v), ""))
        else:
            key.append((2, 0.0, str(v)))
    return tuple(key)


def _values_equal(a, b, rel_tol: float, abs_tol: float) -> bool:
    if a is None or b is None:
        return a is None and b is None
    a_num = isinstance(a, (int, float))
    b_num = isinstance(b, (int, float))
    if a_num != b_num:
        return False
    if a_num:
        return math.isclose(a, b, rel_tol=rel_tol, abs_tol=abs_tol)
    return a == b


def results_equal(a: QueryResult | Iterable[Sequence],
                  b: QueryResult | Iterable[Sequence], *,
                  order_sensitive: bool = False,
                  rel_tol: float = REL_TOL, abs_tol: float = ABS_TOL) -> bool:
    """Multiset equality of normalized rows.

    Accepts QueryResult or bare row iterables. Width must agree;
    column names never matter.
    """
    rows_a = [normalize_row(r) for r in
              (a.rows if isinstance(a, QueryResult) else a)]
    rows_b = [normalize_row(r) for r in
              (b.rows if isinstance(b, QueryResult) else b)]
    if len(rows_a) != len(rows_b):
        return False
    widths = {len(r) for r in rows_a} | {len(r) for r in rows_b}
    if len(widths) > 1:
        return False
    if not order_sensitive:
        rows_a = sorted(rows_a, key=_sort_key)
        rows_b = sorted(rows_b, key=_sort_key)
    return all(
        _values_equal(va, vb, rel_tol, abs_tol)
        for ra, rb in zip(rows_a, rows_b)
        for va, vb in zip(ra, rb))


# -- reliability score ---------------------------------------------------------


@dataclass(frozen=True)
class EvalOutcome:
    item_id: str
    answerable: bool
    matched: bool
    abstained: bool


def rs0_score(outcomes: Sequence[EvalOutcome]) -> float:
    """Reliability at zero penalty.

    Credit 1 for an answerable item whose result matched, credit 1 for
    an unanswerable item the system abstained on, 0 otherwise, averaged
    over all items. With every item answerable this reduces to plain
    execution accuracy.
    """
    if not outcomes:
        raise ValueError("rs0_score of an empty outcome list")
    seen = set()
    for o in outcomes:
        if o.item_id in seen:
            raise ValueError(f"duplicate outcome for item {o.item_id}")
        seen.add(o.item_id)
    credit = sum(1 for o in outcomes
                 if (o.answerable and o.matched)
                 or (not o.answerable and o.abstained))
    return credit / len(outcomes)


# -- dataset records ------------------------------------------------------------


@dataclass(frozen=True)
class DatasetItem:
    id: str
    question: str
    sql: str  # gold, source dialect; empty for unanswerable items
    answerable: bool = True
    relevant_tables: tuple[str, ...] = ()
    source: str = ""


def load_dataset_file(path: str) -> list[DatasetItem]:
    """Read line-delimited dataset records; errors name the record."""
    items = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            where = f"{path}:{lineno}"
            if isinstance(record, dict) and isinstance(record.get("id"), str):
                where = f"{path} record {record['id']!r}"
            if not isinstance(record, dict):
                raise DatasetError(f"{where}: record must be an object")
            for key in ("id", "question", "answerable"):
                if key not in record:
                    raise DatasetError(f"{where}: missing field {key!r}")
            answerable = record["answerable"]
            if not isinstance(answerable, bool):
                raise DatasetError(f"{where}: answerable must be a boolean")
            sql = record.get("sql") or ""
            if answerable and not sql.strip():
                raise DatasetError(f"{where}: answerable item has no gold sql")
            items.append(DatasetItem(
                id=record["id"], question=str(record["question"]), sql=sql,
                answerable=answerable,
                relevant_tables=tuple(record.get("relevant_tables") or ()),
                source=str(record.get("source", ""))))
    return items


# -- split ------------------------------------------------------------------


def split_dataset(items: Sequence[DatasetItem], fractions: dict[str, float],
                  seed: int) -> dict[str, list[DatasetItem]]:
    """Seeded shuffle, then contiguous slices sized by largest-remainder
    rounding. Equal remainders go to the larger fraction, then by split
    name, so sizes are reproducible (785 at 0.1/0.9 gives 78 and 707).
    """
    if not fractions:
        raise ValueError("no split fractions given")
    total = sum(fractions.values())
    if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-9):
        raise ValueError(f"fractions must sum to 1, got {total}")
    if any(f < 0 for f in fractions.values()):
        raise ValueError("fractions must be non-negative")
    pool = list(items)
    random.Random(seed).shuffle(pool)
    n = len(pool)
    quotas = {name: n * f for name, f in fractions.items()}
    sizes = {name: math.floor(q) for name, q in quotas.items()}
    leftover = n - sum(sizes.values())
    order = sorted(fractions,
                   key=lambda name: (-(quotas[name] - sizes[name]),
                                     -fractions[name], name))
    for name in order[:leftover]:
        sizes[name] += 1
    splits: dict[str, list[DatasetItem]] = {}
    cursor = 0
    for name in fractions:
        splits[name] = pool[cursor:cursor + sizes[name]]
        cursor += sizes[name]
    return splits


# -- gold preprocessing -----------------------------------------------------


DROP_UNSUPPORTED = "unsupported construct"
DROP_EXECUTION = "execution error"
DROP_EMPTY = "empty result"


@dataclass
class PreprocessReport:
    kept: list[DatasetItem] = field(default_factory=list)
    dropped: list[tuple[str, str]] = field(default_factory=list)  # (id, reason)

    @property
    def drop_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for _, reason in self.dropped:
            counts[reason] = counts.get(reason, 0) + 1
        return counts


def execute_gold(item: DatasetItem, db: Database) -> QueryResult:
    """Translate and run an item's gold query on the reference database."""
    return db.execute(transpile(item.sql).sql)


def preprocess_dataset(items: Sequence[DatasetItem],
                       db: Database) -> PreprocessReport:
    """Filter a raw dataset against the reference database.

    Answerable items are dropped when the gold query cannot be
    translated, errors at execution, or returns zero rows; unanswerable
    items pass through untouched. Empty results are dropped because a
    gold query that matches nothing cannot distinguish a correct
    prediction from a degenerate one.
    """
    report = PreprocessReport()
    for item in items:
        if not item.answerable:
            report.kept.append(item)
            continue
        try:
            translated = transpile(item.sql).sql
        except UnsupportedConstructError:
            report.dropped.append((item.id, DROP_UNSUPPORTED))
            continue
        except Exception:
            report.dropped.append((item.id, DROP_UNSUPPORTED))
            continue
        try:
            result = db.execute(translated)
        except ExecutionError:
            report.dropped.append((item.id, DROP_EXECUTION))
            continue
        if not result.rows:
            report.dropped.append((item.id, DROP_EMPTY))
            continue
        report.kept.append(item)
    return report


# -- full evaluation --------------------------------------------------------


@dataclass
class ItemEval:
    item_id: str
    status: str  # ok | abstained | error
    matched: bool
    abstained: bool
    answerable: bool
    n_attempts: int
    predicted_sql: str | None = None
    error: str | None = None


@dataclass
class EvalReport:
    rs0: float
    n_items: int
    n_matched: int
    n_abstained: int
    n_errors: int
    items: list[ItemEval] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "rs0": self.rs0,
            "n_items": self.n_items,
            "n_matched": self.n_matched,
            "n_abstained": self.n_abstained,
            "n_errors": self.n_errors,
            "config": self.config,
            "items": [vars(i) for i in self.items],
        }


def run_eval(items: Sequence[DatasetItem], pipeline,
             gold_db: Database, *, config: dict | None = None,
             rel_tol: float = REL_TOL, abs_tol: float = ABS_TOL,
             on_item: Callable[[ItemEval], None] | None = None) -> EvalReport:
    """Drive the pipeline over a dataset and score it.

    ``pipeline`` is anything with run(question) returning a pipeline
    outcome; gold queries execute against ``gold_db``.
    """
    evals: list[ItemEval] = []
    outcomes: list[EvalOutcome] = []
    for item in items:
        outcome = pipeline.run(item.question)
        abstained = outcome.status == "abstained"
        matched = False
        if outcome.status == "ok" and item.answerable:
            gold = execute_gold(item, gold_db)
            matched = results_equal(outcome.result, gold,
                                    rel_tol=rel_tol, abs_tol=abs_tol)
        record = ItemEval(
            item_id=item.id, status=outcome.status, matched=matched,
            abstained=abstained, answerable=item.answerable,
            n_attempts=len(outcome.attempts), predicted_sql=outcome.sql,
            error=outcome.abstain_reason)
        evals.append(record)
        outcomes.append(EvalOutcome(item_id=item.id, answerable=item.answerable,
                                    matched=matched, abstained=abstained))
        if on_item is not None:
            on_item(record)
    report = EvalReport(
        rs0=rs0_score(outcomes), n_items=len(evals),
        n_matched=sum(1 for e in evals if e.matched),
        n_abstained=sum(1 for e in evals if e.abstained),
        n_errors=sum(1 for e in evals if e.status == "error"),
        items=evals, config=dict(config or {}))
    return report


def render_report_table(report: EvalReport) -> str:
    """Console summary mirroring the headline result table's columns."""
    cfg = report.config
    headers = ("base LLM", "schema", "#demos", "max attempts", "RS(0)")
    row = (str(cfg.get("model", "-")),
           "Y" if cfg.get("include_schema", True) else "N",
           str(cfg.get("k_demos", "-")),
           str(cfg.get("max_attempts", "-")),
           f"{report.rs0 * 100:.2f}%")
    widths = [max(len(h), len(v)) for h, v in zip(headers, row)]
    line = " | ".join(h.ljust(w) for h, w in zip(headers, widths))
    sep = "-+-".join("-" * w for w in widths)
    values = " | ".join(v.ljust(w) for v, w in zip(row, widths))
    return "\n".join([line, sep, values])

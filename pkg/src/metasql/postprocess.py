"""Completion post-processing: SQL extraction and the identifier guardrail.

The guardrail is the privacy boundary between generated text and the
engine: before anything executes, every referenced table and column must
already exist in the schema catalog, and star-selection is rejected
unless explicitly allowed. Names invented by the model therefore fail
closed, as a failed attempt with a synthetic error message, without
touching stored rows.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .catalog import SchemaCatalog
from .errors import ExtractionError, SqlParseError
from .sqlkit import nodes as n
from .sqlkit.parser import parse_sql

_FENCE_RE = re.compile(r"^```sql[ \t]*\n(.*?)^```", re.MULTILINE | re.DOTALL)


def extract_sql(completion: str) -> str:
    """SQL text of the last ```sql fenced block, stripped.

    Chain-of-thought output may contain several candidate queries; the
    final block is the model's answer. No block raises ExtractionError.
    """
    matches = _FENCE_RE.findall(completion or "")
    if not matches:
        raise ExtractionError("no fenced sql block in completion")
    sql = matches[-1].strip()
    if not sql:
        raise ExtractionError("fenced sql block is empty")
    return sql


@dataclass(frozen=True)
class ColumnUse:
    table: str | None  # resolved base table, or None for a bare column
    column: str
    # base tables in scope when the reference was bare
    candidates: tuple[str, ...] = ()


@dataclass
class IdentifierReport:
    tables: list[str] = field(default_factory=list)
    columns: list[ColumnUse] = field(default_factory=list)
    star_used: bool = False


class _Scope:
    def __init__(self, parent: "_Scope | None" = None):
        self.parent = parent
        # alias (lower) -> base table name, or None for derived relations
        self.relations: dict[str, str | None] = {}
        self.output_aliases: set[str] = set()
        self.cte_names: set[str] = set()

    def resolve(self, alias: str) -> tuple[bool, str | None]:
        """(found, base_table_or_None_for_derived) walking outward."""
        scope: _Scope | None = self
        key = alias.lower()
        while scope is not None:
            if key in scope.relations:
                return True, scope.relations[key]
            scope = scope.parent
        return False, None

    def cte_visible(self, name: str) -> bool:
        scope: _Scope | None = self
        key = name.lower()
        while scope is not None:
            if key in scope.cte_names:
                return True
            scope = scope.parent
        return False

    def base_tables(self) -> tuple[str, ...]:
        return tuple(t for t in self.relations.values() if t is not None)


class _Collector:
    def __init__(self):
        self.report = IdentifierReport()
        self._seen_tables: set[str] = set()
        self._seen_columns: set[tuple] = set()

    def add_table(self, name: str) -> None:
        if name.lower() not in self._seen_tables:
            self._seen_tables.add(name.lower())
            self.report.tables.append(name)

    def add_column(self, use: ColumnUse) -> None:
        key = ((use.table or "").lower(), use.column.lower(), use.candidates)
        if key not in self._seen_columns:
            self._seen_columns.add(key)
            self.report.columns.append(use)

    # -- select handling ---------------------------------------------------

    def select(self, sel: n.Select, parent: _Scope | None) -> None:
        scope = _Scope(parent)
        for cte in sel.ctes:
            self.select(cte.select, parent)
            scope.cte_names.add(cte.name.lower())
        self._cores(sel, scope)
        for item in sel.order_by:
            self.expr(item.expr, scope)
        if sel.limit is not None:
            self.expr(sel.limit, scope)
        if sel.offset is not None:
            self.expr(sel.offset, scope)

    def _cores(self, sel: n.Select, scope: _Scope) -> None:
        self._core(sel, scope)
        for _, _, right in sel.compounds:
            # each compound arm has its own FROM scope but shares CTEs
            arm = _Scope(scope.parent)
            arm.cte_names = scope.cte_names
            self._core(right, arm)
            scope.output_aliases |= arm.output_aliases

    def _core(self, sel: n.Select, scope: _Scope) -> None:
        if sel.from_ is not None:
            self.relation(sel.from_, scope)
        for item in sel.items:
            if isinstance(item.expr, n.Star):
                self.report.star_used = True
                continue
            self.expr(item.expr, scope)
            if item.alias:
                scope.output_aliases.add(item.alias.lower())
            elif isinstance(item.expr, n.ColumnRef):
                scope.output_aliases.add(item.expr.name.lower())
        if sel.where is not None:
            self.expr(sel.where, scope)
        for expr in sel.group_by:
            self.expr(expr, scope)
        if sel.having is not None:
            self.expr(sel.having, scope)

    def relation(self, rel: n.Node, scope: _Scope) -> None:
        if isinstance(rel, n.TableRef):
            alias = (rel.alias or rel.name).lower()
            if scope.cte_visible(rel.name):
                scope.relations[alias] = None
            else:
                self.add_table(rel.name)
                scope.relations[alias] = rel.name
        elif isinstance(rel, n.DerivedTable):
            self.select(rel.select, scope)
            scope.relations[rel.alias.lower()] = None
        elif isinstance(rel, n.Join):
            self.relation(rel.left, scope)
            self.relation(rel.right, scope)
            if rel.on is not None:
                self.expr(rel.on, scope)

    def expr(self, node: n.Node, scope: _Scope) -> None:
        if node is None:
            return
        if isinstance(node, n.ColumnRef):
            if node.table is not None:
                found, base = scope.resolve(node.table)
                if found:
                    if base is not None:
                        self.add_column(ColumnUse(table=base, column=node.name))
                    # derived/CTE relations check against output aliases,
                    # which are exempt from catalog existence
                else:
                    # unknown qualifier: treat as a direct table reference
                    self.add_table(node.table)
                    self.add_column(ColumnUse(table=node.table, column=node.name))
            else:
                if node.name.lower() in scope.output_aliases:
                    return
                self.add_column(ColumnUse(table=None, column=node.name,
                                          candidates=scope.base_tables()))
            return
        if isinstance(node, n.Star):
            self.report.star_used = True
            return
        if isinstance(node, (n.ScalarSubquery,)):
            self.select(node.select, scope)
            return
        if isinstance(node, n.Exists):
            self.select(node.subquery, scope)
            return
        if isinstance(node, n.InExpr):
            self.expr(node.operand, scope)
            if node.subquery is not None:
                self.select(node.subquery, scope)
            for item in node.items or []:
                self.expr(item, scope)
            return
        # generic: walk child nodes in this scope
        for name in node.__dataclass_fields__:
            if name == "span":
                continue
            self._walk_value(getattr(node, name), scope)

    def _walk_value(self, value, scope: _Scope) -> None:
        if isinstance(value, n.Select):
            self.select(value, scope)
        elif isinstance(value, n.Node):
            self.expr(value, scope)
        elif isinstance(value, (list, tuple)):
            for item in value:
                self._walk_value(item, scope)


def collect_identifiers(sql: str) -> IdentifierReport:
    """Tables and columns a statement references, with aliases resolved.

    CTE names, derived-table aliases, and output aliases are not
    catalog identifiers and never appear in the report.
    """
    tree = parse_sql(sql, dialect="target")
    collector = _Collector()
    collector.select(tree, None)
    return collector.report


@dataclass(frozen=True)
class Violation:
    identifier: str
    reason: str


@dataclass
class GuardrailReport:
    ok: bool = True
    violations: list[Violation] = field(default_factory=list)
    tables: list[str] = field(default_factory=list)
    columns: list[ColumnUse] = field(default_factory=list)

    def first_message(self) -> str:
        if not self.violations:
            return ""
        v = self.violations[0]
        if v.reason == "star":
            return "query selects all columns; star selection is disallowed"
        if v.reason.startswith("parse:"):
            return v.reason
        return f"query references unknown identifier {v.identifier}"


def guardrail_check(sql: str, catalog: SchemaCatalog, *,
                    allow_star: bool = False) -> GuardrailReport:
    """Validate every referenced identifier against the catalog.

    A parse failure is itself a violation: text we cannot analyze is
    text we refuse to execute.
    """
    report = GuardrailReport()
    try:
        ids = collect_identifiers(sql)
    except SqlParseError as exc:
        report.ok = False
        report.violations.append(Violation(identifier="", reason=f"parse: {exc}"))
        return report
    report.tables = ids.tables
    report.columns = ids.columns
    for table in ids.tables:
        if not catalog.has_table(table):
            report.violations.append(Violation(identifier=table,
                                               reason="unknown table"))
    for use in ids.columns:
        if use.table is not None:
            if catalog.has_table(use.table) \
                    and not catalog.has_column(use.table, use.column):
                report.violations.append(
                    Violation(identifier=f"{use.table}.{use.column}",
                              reason="unknown column"))
        else:
            pool = use.candidates or tuple(catalog.table_names)
            if not any(catalog.has_column(t, use.column) for t in pool):
                report.violations.append(Violation(identifier=use.column,
                                                   reason="unknown column"))
    if ids.star_used and not allow_star:
        report.violations.append(Violation(identifier="*", reason="star"))
    report.ok = not report.violations
    return report

"""Schema catalog: introspection and prompt-ready rendering.

The rendered form of a table is a dataframe-style fixed-width block.
Generation quality is sensitive to this layout, so it is pinned by
byte-exact fixtures: fields are right-justified, each field is one
space plus max(header width + 1 extra for numeric columns, widest cell
+ 1), and the row-index column is left-justified with the header line
blank above it.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .engine import Database
from .errors import MetasqlError

_HEADERS = ("cid", "name", "type", "notnull", "dflt_value", "pk")
# columns whose header is padded like a numeric dtype
_NUMERIC_HEADERS = {"cid", "notnull", "pk"}


@dataclass(frozen=True)
class ColumnInfo:
    cid: int
    name: str
    type: str
    notnull: bool = False
    dflt_value: str | None = None
    pk: bool = False


@dataclass
class TableSchema:
    name: str
    columns: list[ColumnInfo] = field(default_factory=list)

    def column(self, name: str) -> ColumnInfo | None:
        wanted = name.lower()
        for col in self.columns:
            if col.name.lower() == wanted:
                return col
        return None

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]


class SchemaCatalog:
    """Ordered collection of table schemas with case-insensitive lookup."""

    def __init__(self, tables: list[TableSchema] | None = None):
        self._tables: dict[str, TableSchema] = {}
        for table in tables or []:
            self.add(table)

    def add(self, table: TableSchema) -> None:
        key = table.name.lower()
        if key in self._tables:
            raise MetasqlError(f"duplicate table in catalog: {table.name}")
        self._tables[key] = table

    @property
    def tables(self) -> list[TableSchema]:
        return list(self._tables.values())

    @property
    def table_names(self) -> list[str]:
        return [t.name for t in self._tables.values()]

    def table(self, name: str) -> TableSchema | None:
        return self._tables.get(name.lower())

    def has_table(self, name: str) -> bool:
        return name.lower() in self._tables

    def has_column(self, table: str, column: str) -> bool:
        schema = self.table(table)
        return schema is not None and schema.column(column) is not None

    def any_table_has_column(self, column: str) -> bool:
        return any(t.column(column) is not None for t in self._tables.values())

    @classmethod
    def from_database(cls, db: Database) -> "SchemaCatalog":
        """Introspect every user table, in creation order."""
        catalog = cls()
        names = db.pragma_rows(
            "SELECT name FROM sqlite_master WHERE type = 'table' "
            "AND name NOT LIKE 'sqlite_%'")
        for (table_name,) in names:
            quoted = table_name.replace("'", "''")
            rows = db.pragma_rows(f"PRAGMA table_info('{quoted}')")
            columns = [ColumnInfo(cid=cid, name=name, type=type_ or "",
                                  notnull=bool(notnull), dflt_value=dflt,
                                  pk=bool(pk))
                       for cid, name, type_, notnull, dflt, pk in rows]
            catalog.add(TableSchema(name=table_name, columns=columns))
        return catalog


def _frame(table: TableSchema) -> str:
    grid = [[str(c.cid), c.name, c.type, str(bool(c.notnull)),
             "None" if c.dflt_value is None else str(c.dflt_value),
             str(bool(c.pk))]
            for c in table.columns]
    index = [str(i) for i in range(len(grid))]
    idx_w = max((len(s) for s in index), default=1)
    widths = []
    for j, header in enumerate(_HEADERS):
        head_w = len(header) + (1 if header in _NUMERIC_HEADERS else 0)
        cell_w = 1 + max((len(row[j]) for row in grid), default=0)
        widths.append(1 + max(head_w, cell_w))
    # header carries no index gutter: the line starts at the first
    # header name, so it sits left of where the field alignment would
    # put it and is shorter than the data rows
    lines = ["".join(h.rjust(w) for h, w in zip(_HEADERS, widths)).lstrip()]
    for idx, row in zip(index, grid):
        lines.append(idx.ljust(idx_w)
                     + "".join(cell.rjust(w) for cell, w in zip(row, widths)))
    return "\n".join(lines)


def render_table_block(table: TableSchema) -> str:
    """One table's schema block: title, Schema: marker, fixed-width frame."""
    return f"Table: {table.name}\nSchema:\n{_frame(table)}"


def render_schema_block(catalog: SchemaCatalog,
                        table_names: list[str] | None = None) -> str:
    """Concatenated table blocks in catalog order, blank line between.

    ``table_names`` restricts and does not reorder; unknown names raise.
    """
    if table_names is None:
        tables = catalog.tables
    else:
        wanted = {n.lower() for n in table_names}
        unknown = wanted - {t.name.lower() for t in catalog.tables}
        if unknown:
            raise MetasqlError(f"unknown tables: {sorted(unknown)}")
        tables = [t for t in catalog.tables if t.name.lower() in wanted]
    return "\n\n".join(render_table_block(t) for t in tables)

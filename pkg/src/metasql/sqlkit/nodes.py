"""Syntax tree for the SELECT subset understood by the toolkit.

Every node carries a source span (line, column, both 1-based) for error
reporting. Spans are excluded from equality so that parse -> render ->
parse round-trips compare structurally equal.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


Span = tuple[int, int]

_NOSPAN: Span = (0, 0)


@dataclass
class Node:
    span: Span = field(default=_NOSPAN, compare=False, kw_only=True)


# --- expressions ---------------------------------------------------------


@dataclass
class Literal(Node):
    # kind: one of "string", "integer", "float", "null", "bool"
    value: Union[str, int, float, bool, None] = None
    kind: str = "null"


@dataclass
class ColumnRef(Node):
    name: str = ""
    table: Optional[str] = None


@dataclass
class Star(Node):
    # bare `*` or qualified `t.*`
    table: Optional[str] = None


@dataclass
class FuncCall(Node):
    name: str = ""
    args: list[Node] = field(default_factory=list)
    distinct: bool = False
    star: bool = False  # COUNT(*)


@dataclass
class Keyword(Node):
    # zero-argument builtins used without parentheses:
    # CURRENT_TIME, CURRENT_TIMESTAMP, CURRENT_DATE
    name: str = ""


@dataclass
class IntervalLiteral(Node):
    # INTERVAL '<n> <unit>'; n kept signed, unit singular lowercase
    n: int = 0
    unit: str = "day"


@dataclass
class BinaryOp(Node):
    op: str = ""
    left: Node = None  # type: ignore[assignment]
    right: Node = None  # type: ignore[assignment]


@dataclass
class UnaryOp(Node):
    op: str = ""  # "-", "+", "NOT"
    operand: Node = None  # type: ignore[assignment]


@dataclass
class Cast(Node):
    operand: Node = None  # type: ignore[assignment]
    type_name: str = ""


@dataclass
class CaseWhen(Node):
    operand: Optional[Node] = None
    whens: list[tuple[Node, Node]] = field(default_factory=list)
    else_: Optional[Node] = None


@dataclass
class InExpr(Node):
    operand: Node = None  # type: ignore[assignment]
    negated: bool = False
    items: Optional[list[Node]] = None  # literal list form
    subquery: Optional["Select"] = None


@dataclass
class Between(Node):
    operand: Node = None  # type: ignore[assignment]
    negated: bool = False
    low: Node = None  # type: ignore[assignment]
    high: Node = None  # type: ignore[assignment]


@dataclass
class LikeOp(Node):
    operand: Node = None  # type: ignore[assignment]
    negated: bool = False
    pattern: Node = None  # type: ignore[assignment]


@dataclass
class IsNull(Node):
    operand: Node = None  # type: ignore[assignment]
    negated: bool = False


@dataclass
class Exists(Node):
    negated: bool = False
    subquery: "Select" = None  # type: ignore[assignment]


@dataclass
class ScalarSubquery(Node):
    select: "Select" = None  # type: ignore[assignment]


# --- relations -----------------------------------------------------------


@dataclass
class TableRef(Node):
    name: str = ""
    alias: Optional[str] = None


@dataclass
class DerivedTable(Node):
    select: "Select" = None  # type: ignore[assignment]
    alias: str = ""


@dataclass
class Join(Node):
    left: Node = None  # type: ignore[assignment]
    kind: str = "INNER"  # INNER | LEFT | RIGHT | FULL | CROSS
    right: Node = None  # type: ignore[assignment]
    on: Optional[Node] = None


# --- select --------------------------------------------------------------


@dataclass
class SelectItem(Node):
    expr: Node = None  # type: ignore[assignment]
    alias: Optional[str] = None


@dataclass
class OrderItem(Node):
    expr: Node = None  # type: ignore[assignment]
    desc: bool = False


@dataclass
class Cte(Node):
    name: str = ""
    select: "Select" = None  # type: ignore[assignment]


@dataclass
class Select(Node):
    ctes: list[Cte] = field(default_factory=list)
    distinct: bool = False
    items: list[SelectItem] = field(default_factory=list)
    from_: Optional[Node] = None
    where: Optional[Node] = None
    group_by: list[Node] = field(default_factory=list)
    having: Optional[Node] = None
    order_by: list[OrderItem] = field(default_factory=list)
    limit: Optional[Node] = None
    offset: Optional[Node] = None
    # trailing compound parts: [(op, all?, select)] with op in UNION/INTERSECT/EXCEPT
    compounds: list[tuple[str, bool, "Select"]] = field(default_factory=list)


def walk(node):
    """Yield node and every descendant Node, depth first."""
    if node is None:
        return
    yield node
    for f in getattr(node, "__dataclass_fields__", {}):
        if f == "span":
            continue
        value = getattr(node, f)
        yield from _walk_value(value)


def _walk_value(value):
    if isinstance(value, Node):
        yield from walk(value)
    elif isinstance(value, (list, tuple)):
        for item in value:
            yield from _walk_value(item)

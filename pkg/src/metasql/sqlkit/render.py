"""Canonical single-line rendering of the syntax tree.

Keywords and function names come out uppercase, identifiers keep their
original spelling and are double-quoted only when required, and
parentheses are re-derived from operator precedence. The invariant the
tests lean on: parse(render(tree)) == tree for every tree the parser can
produce.
"""
from __future__ import annotations

import re

from ..errors import MetasqlError
from . import nodes as n
from .parser import KEYWORDS

_PLAIN_IDENT_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

# operator precedence, mirrors the parser
_PREC_OR = 1
_PREC_AND = 2
_PREC_NOT = 3
_PREC_CMP = 4
_PREC_ADD = 5
_PREC_MUL = 6
_PREC_UNARY = 7
_PREC_ATOM = 9

_BINARY_PREC = {
    "OR": _PREC_OR, "AND": _PREC_AND,
    "=": _PREC_CMP, "!=": _PREC_CMP, "<": _PREC_CMP, "<=": _PREC_CMP,
    ">": _PREC_CMP, ">=": _PREC_CMP,
    "+": _PREC_ADD, "-": _PREC_ADD, "||": _PREC_ADD,
    "*": _PREC_MUL, "/": _PREC_MUL, "%": _PREC_MUL,
}


def quote_ident(name: str) -> str:
    if _PLAIN_IDENT_RE.match(name) and name.upper() not in KEYWORDS:
        return name
    return '"' + name.replace('"', '""') + '"'


def _string_literal(value: str) -> str:
    return "'" + value.replace("'", "''") + "'"


def render_expr(node: n.Node, parent_prec: int = 0) -> str:
    text, prec = _expr(node)
    if prec < parent_prec:
        return f"({text})"
    return text


def _expr(node: n.Node) -> tuple[str, int]:
    if isinstance(node, n.Literal):
        if node.kind == "null":
            return "NULL", _PREC_ATOM
        if node.kind == "bool":
            return ("TRUE" if node.value else "FALSE"), _PREC_ATOM
        if node.kind == "string":
            return _string_literal(node.value), _PREC_ATOM
        if node.kind == "integer":
            return str(node.value), _PREC_ATOM if node.value >= 0 else _PREC_UNARY
        text = repr(node.value)
        return text, _PREC_ATOM if node.value >= 0 else _PREC_UNARY
    if isinstance(node, n.ColumnRef):
        if node.table:
            return f"{quote_ident(node.table)}.{quote_ident(node.name)}", _PREC_ATOM
        return quote_ident(node.name), _PREC_ATOM
    if isinstance(node, n.Star):
        return (f"{quote_ident(node.table)}.*" if node.table else "*"), _PREC_ATOM
    if isinstance(node, n.Keyword):
        return node.name, _PREC_ATOM
    if isinstance(node, n.IntervalLiteral):
        unit = node.unit + ("" if abs(node.n) == 1 else "s")
        return f"INTERVAL '{node.n} {unit}'", _PREC_ATOM
    if isinstance(node, n.FuncCall):
        name = node.name.upper()
        if node.star:
            return f"{name}(*)", _PREC_ATOM
        prefix = "DISTINCT " if node.distinct else ""
        args = ", ".join(render_expr(a) for a in node.args)
        return f"{name}({prefix}{args})", _PREC_ATOM
    if isinstance(node, n.Cast):
        return (f"CAST({render_expr(node.operand)} AS {node.type_name.upper()})",
                _PREC_ATOM)
    if isinstance(node, n.BinaryOp):
        prec = _BINARY_PREC[node.op]
        left = render_expr(node.left, prec)
        # left-associative: right operand of equal precedence needs parens
        right = render_expr(node.right, prec + 1)
        return f"{left} {node.op} {right}", prec
    if isinstance(node, n.UnaryOp):
        if node.op == "NOT":
            return f"NOT {render_expr(node.operand, _PREC_NOT)}", _PREC_NOT
        return f"{node.op}{render_expr(node.operand, _PREC_UNARY)}", _PREC_UNARY
    if isinstance(node, n.IsNull):
        op = "IS NOT NULL" if node.negated else "IS NULL"
        return f"{render_expr(node.operand, _PREC_CMP + 1)} {op}", _PREC_CMP
    if isinstance(node, n.InExpr):
        kw = "NOT IN" if node.negated else "IN"
        lhs = render_expr(node.operand, _PREC_CMP + 1)
        if node.subquery is not None:
            return f"{lhs} {kw} ({render_select(node.subquery)})", _PREC_CMP
        items = ", ".join(render_expr(item) for item in node.items or [])
        return f"{lhs} {kw} ({items})", _PREC_CMP
    if isinstance(node, n.Between):
        kw = "NOT BETWEEN" if node.negated else "BETWEEN"
        return (f"{render_expr(node.operand, _PREC_CMP + 1)} {kw} "
                f"{render_expr(node.low, _PREC_CMP + 1)} AND "
                f"{render_expr(node.high, _PREC_CMP + 1)}", _PREC_CMP)
    if isinstance(node, n.LikeOp):
        kw = "NOT LIKE" if node.negated else "LIKE"
        return (f"{render_expr(node.operand, _PREC_CMP + 1)} {kw} "
                f"{render_expr(node.pattern, _PREC_CMP + 1)}", _PREC_CMP)
    if isinstance(node, n.Exists):
        kw = "NOT EXISTS" if node.negated else "EXISTS"
        return f"{kw} ({render_select(node.subquery)})", _PREC_ATOM
    if isinstance(node, n.ScalarSubquery):
        return f"({render_select(node.select)})", _PREC_ATOM
    if isinstance(node, n.CaseWhen):
        parts = ["CASE"]
        if node.operand is not None:
            parts.append(render_expr(node.operand))
        for cond, result in node.whens:
            parts.append(f"WHEN {render_expr(cond)} THEN {render_expr(result)}")
        if node.else_ is not None:
            parts.append(f"ELSE {render_expr(node.else_)}")
        parts.append("END")
        return " ".join(parts), _PREC_ATOM
    raise MetasqlError(f"cannot render node of type {type(node).__name__}")


def _render_table(node: n.Node) -> str:
    if isinstance(node, n.TableRef):
        text = quote_ident(node.name)
        if node.alias:
            text += f" AS {quote_ident(node.alias)}"
        return text
    if isinstance(node, n.DerivedTable):
        return f"({render_select(node.select)}) AS {quote_ident(node.alias)}"
    if isinstance(node, n.Join):
        left = _render_table(node.left)
        right = node.right
        right_text = _render_table(right)
        if isinstance(right, n.Join):
            right_text = f"({right_text})"
        kw = "JOIN" if node.kind == "INNER" else f"{node.kind} JOIN"
        text = f"{left} {kw} {right_text}"
        if node.on is not None:
            text += f" ON {render_expr(node.on)}"
        return text
    raise MetasqlError(f"cannot render relation of type {type(node).__name__}")


def _render_core(select: n.Select) -> str:
    parts = ["SELECT"]
    if select.distinct:
        parts.append("DISTINCT")
    items = []
    for item in select.items:
        text = render_expr(item.expr)
        if item.alias:
            text += f" AS {quote_ident(item.alias)}"
        items.append(text)
    parts.append(", ".join(items))
    if select.from_ is not None:
        parts.append("FROM " + _render_table(select.from_))
    if select.where is not None:
        parts.append("WHERE " + render_expr(select.where))
    if select.group_by:
        parts.append("GROUP BY " + ", ".join(render_expr(e) for e in select.group_by))
    if select.having is not None:
        parts.append("HAVING " + render_expr(select.having))
    return " ".join(parts)


def render_select(select: n.Select) -> str:
    parts = []
    if select.ctes:
        ctes = ", ".join(f"{quote_ident(c.name)} AS ({render_select(c.select)})"
                         for c in select.ctes)
        parts.append(f"WITH {ctes}")
    parts.append(_render_core(select))
    for op, all_flag, right in select.compounds:
        parts.append(op + (" ALL" if all_flag else ""))
        parts.append(_render_core(right))
    if select.order_by:
        items = ", ".join(render_expr(o.expr) + (" DESC" if o.desc else "")
                          for o in select.order_by)
        parts.append("ORDER BY " + items)
    if select.limit is not None:
        parts.append("LIMIT " + render_expr(select.limit))
    if select.offset is not None:
        parts.append("OFFSET " + render_expr(select.offset))
    return " ".join(parts)


def render_sql(select: n.Select) -> str:
    """Render a parsed statement back to canonical SQL text."""
    return render_select(select)

"""Lowering of target-dialect trees onto the sqlite storage layer.

The embedded engine speaks the target dialect at its surface. This pass
rewrites the constructs sqlite does not share (timestamp casts, INTERVAL
arithmetic, DATE_TRUNC, value-first STRFTIME, DATEDIFF) into calls to
Python UDFs registered on every connection, and enforces a strict
function allowlist so source-dialect leftovers (datetime(), CURRENT_TIME,
modifier-style strftime) fail loudly instead of silently borrowing
sqlite's native semantics.
"""
from __future__ import annotations

from dataclasses import replace

from ..errors import ExecutionError
from . import nodes as n

# functions executed by sqlite itself
_NATIVE_FUNCS = {
    "COUNT", "SUM", "AVG", "MIN", "MAX", "TOTAL",
    "ABS", "ROUND", "LOWER", "UPPER", "LENGTH", "COALESCE", "NULLIF",
    "SUBSTR", "SUBSTRING", "TRIM", "LTRIM", "RTRIM", "REPLACE", "INSTR",
    "IFNULL", "TYPEOF",
}

# target-dialect functions implemented as registered UDFs; values are the
# names used on the sqlite side
_UDF_FUNCS = {
    "DATE_TRUNC": "DATE_TRUNC",
    "STRFTIME": "TS_STRFTIME",
    "DATEDIFF": "DATEDIFF",
    "YEAR": "TS_YEAR",
    "MONTH": "TS_MONTH",
    "DAY": "TS_DAY",
}

_TIMESTAMP_TYPES = {"TIMESTAMP", "DATETIME"}
_PASSTHROUGH_CAST_PREFIXES = (
    "INT", "BIGINT", "SMALLINT", "REAL", "FLOAT", "DOUBLE", "NUMERIC",
    "DECIMAL", "TEXT", "VARCHAR", "CHAR",
)


def _lower_cast(cast: n.Cast) -> n.Node:
    type_name = cast.type_name.upper()
    if type_name in _TIMESTAMP_TYPES:
        return n.FuncCall(name="TS_CAST", args=[cast.operand], span=cast.span)
    if type_name == "DATE":
        return n.FuncCall(name="DATE_CAST", args=[cast.operand], span=cast.span)
    if type_name.startswith(_PASSTHROUGH_CAST_PREFIXES):
        return cast
    raise ExecutionError(f"unsupported cast target type: {cast.type_name}")


def _lower_func(call: n.FuncCall) -> n.Node:
    name = call.name
    if name in ("TS_CAST", "DATE_CAST", "TS_STRFTIME", "TS_OFFSET",
                "TS_YEAR", "TS_MONTH", "TS_DAY"):
        return call  # already lowered (nested rewrite)
    if name in _NATIVE_FUNCS:
        return call
    if name not in _UDF_FUNCS:
        raise ExecutionError(f"unknown function: {name}")

    args = call.args
    if name == "STRFTIME":
        if call.star or len(args) != 2:
            raise ExecutionError(
                "STRFTIME takes exactly two arguments: value, format")
        value, fmt = args
        # the dialect accepts either argument order; detect a leading
        # format string so both spellings reach the same UDF
        if _looks_like_format(value) and not _looks_like_format(fmt):
            value, fmt = fmt, value
        return n.FuncCall(name="TS_STRFTIME", args=[value, fmt], span=call.span)
    if name == "DATE_TRUNC":
        if len(args) != 2:
            raise ExecutionError("DATE_TRUNC takes exactly two arguments")
        part = args[0]
        if not (isinstance(part, n.Literal) and part.kind == "string"):
            raise ExecutionError("DATE_TRUNC part must be a string literal")
        if part.value.lower() not in ("year", "month", "day"):
            raise ExecutionError(
                f"DATE_TRUNC part must be year, month, or day, got {part.value!r}")
        return call
    if name == "DATEDIFF":
        if len(args) != 3:
            raise ExecutionError("DATEDIFF takes exactly three arguments")
        return call
    if len(args) != 1:
        raise ExecutionError(f"{name} takes exactly one argument")
    return n.FuncCall(name=_UDF_FUNCS[name], args=args, span=call.span)


def _looks_like_format(node: n.Node) -> bool:
    return (isinstance(node, n.Literal) and node.kind == "string"
            and "%" in str(node.value))


def _lower_node(node: n.Node) -> n.Node:
    if isinstance(node, n.Keyword):
        if node.name == "CURRENT_TIME":
            raise ExecutionError(
                "CURRENT_TIME is not supported; use CURRENT_TIMESTAMP")
        return node
    if isinstance(node, n.IntervalLiteral):
        # only reachable when the interval sits outside +/- arithmetic;
        # those positions were rewritten before children were visited
        raise ExecutionError("INTERVAL literal outside timestamp arithmetic")
    if isinstance(node, n.BinaryOp) and node.op in ("+", "-") \
            and isinstance(node.right, n.IntervalLiteral):
        interval = node.right
        count = interval.n if node.op == "+" else -interval.n
        return n.FuncCall(
            name="TS_OFFSET",
            args=[node.left,
                  n.Literal(value=count, kind="integer"),
                  n.Literal(value=interval.unit, kind="string")],
            span=node.span)
    if isinstance(node, n.Cast):
        return _lower_cast(node)
    if isinstance(node, n.FuncCall):
        return _lower_func(node)
    return node


def lower_tree(node):
    """Rewrite a parsed target-dialect tree into sqlite-executable form.

    Raises ExecutionError for constructs outside the engine's dialect;
    the message names the construct so it can flow into a retry prompt.
    """
    if node is None:
        return None
    if isinstance(node, (list, tuple)):
        items = [lower_tree(item) for item in node]
        return tuple(items) if isinstance(node, tuple) else items
    if not isinstance(node, n.Node):
        return node
    # interval arithmetic must be matched before its children are
    # rewritten, or the bare IntervalLiteral check fires first
    if isinstance(node, n.BinaryOp) and node.op in ("+", "-") \
            and isinstance(node.right, n.IntervalLiteral):
        lowered = _lower_node(node)
        args = [lower_tree(lowered.args[0])] + lowered.args[1:]
        return replace(lowered, args=args)
    fields = {}
    for name in node.__dataclass_fields__:
        if name == "span":
            continue
        fields[name] = lower_tree(getattr(node, name))
    return _lower_node(replace(node, **fields))

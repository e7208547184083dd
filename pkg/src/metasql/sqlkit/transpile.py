"""Source-to-target dialect translation for datetime constructs.

The source dialect expresses date arithmetic through a variadic
``datetime(value, modifier, ...)`` function and a bare ``CURRENT_TIME``
keyword; the target dialect wants explicit timestamp casts, DATE_TRUNC,
and INTERVAL arithmetic. Translation happens on the syntax tree and is
organized into five independently disableable rule families:

``current_time``
    CURRENT_TIME -> CURRENT_TIMESTAMP.
``datetime_cast``
    datetime(expr) -> CAST(expr AS TIMESTAMP); also maps the literal
    base 'now' (and zero-argument datetime()) to CURRENT_TIMESTAMP.
``datetime_start_of``
    'start of year|month|day' modifiers -> DATE_TRUNC('unit', expr).
``datetime_offset``
    '+N unit' / '-N unit' modifiers -> expr + / - INTERVAL 'N unit'.
``datetime_noop``
    zero offsets such as '-0 year' are dropped; the base cast still
    applies when no other modifier converted the value.

Modifiers compose left to right, each wrapping the result of the one
before it. An unrecognized modifier raises UnsupportedConstructError
naming the modifier text; a disabled family leaves its construct in
source form, which the target engine then rejects loudly. Rules are
re-applied until the tree stops changing.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

from ..errors import MetasqlError, UnsupportedConstructError
from . import nodes as n
from .parser import parse_sql
from .render import render_sql

RULE_FAMILIES = (
    "current_time",
    "datetime_cast",
    "datetime_start_of",
    "datetime_offset",
    "datetime_noop",
)

_START_OF_RE = re.compile(r"^start of (year|month|day)$")
_OFFSET_RE = re.compile(r"^([+-])(\d+) ([a-z]+?)s?$")

_UNITS = ("year", "month", "day", "hour", "minute", "second")


@dataclass
class TranspiledQuery:
    sql: str
    applied_rules: list[str] = field(default_factory=list)


class _Rewriter:
    def __init__(self, disabled: frozenset[str]):
        unknown = disabled - set(RULE_FAMILIES)
        if unknown:
            raise ValueError(f"unknown rule families: {sorted(unknown)}")
        self.disabled = disabled
        self.applied: list[str] = []
        self.changed = False

    def enabled(self, family: str) -> bool:
        return family not in self.disabled

    def fire(self, family: str) -> None:
        self.applied.append(family)
        self.changed = True

    # -- generic traversal -------------------------------------------------

    def rewrite(self, node):
        if node is None:
            return None
        if isinstance(node, (list, tuple)):
            items = [self.rewrite(item) for item in node]
            return type(node)(items) if isinstance(node, tuple) else items
        if not isinstance(node, n.Node):
            return node
        fields = {}
        for name in node.__dataclass_fields__:
            if name == "span":
                continue
            fields[name] = self.rewrite(getattr(node, name))
        node = replace(node, **fields)
        return self.rewrite_node(node)

    # -- rule dispatch -------------------------------------------------------

    def rewrite_node(self, node: n.Node) -> n.Node:
        if isinstance(node, n.Keyword) and node.name == "CURRENT_TIME":
            if self.enabled("current_time"):
                self.fire("current_time")
                return n.Keyword(name="CURRENT_TIMESTAMP", span=node.span)
            return node
        if isinstance(node, n.FuncCall) and node.name == "DATETIME":
            return self.rewrite_datetime(node)
        if isinstance(node, n.FuncCall) and node.name == "STRFTIME":
            return self.rewrite_strftime(node)
        return node

    def rewrite_datetime(self, call: n.FuncCall) -> n.Node:
        if call.star or call.distinct:
            raise UnsupportedConstructError("malformed datetime() call")
        modifiers = []
        for arg in call.args[1:]:
            if not (isinstance(arg, n.Literal) and arg.kind == "string"):
                raise UnsupportedConstructError(
                    "datetime() modifier must be a string literal")
            modifiers.append(arg.value)
        if not call.args:
            if not self.enabled("datetime_cast"):
                return call
            self.fire("datetime_cast")
            return n.Keyword(name="CURRENT_TIMESTAMP", span=call.span)

        base = call.args[0]
        converted = False
        if isinstance(base, n.Literal) and base.kind == "string" \
                and base.value in ("now", "NOW"):
            if not self.enabled("datetime_cast"):
                return call
            base = n.Keyword(name="CURRENT_TIMESTAMP", span=call.span)
            converted = True
            cast_fired = True
        else:
            cast_fired = False

        plan: list[tuple[str, object]] = []
        for mod in modifiers:
            text = mod.strip().lower()
            m = _START_OF_RE.match(text)
            if m:
                plan.append(("datetime_start_of", m.group(1)))
                continue
            m = _OFFSET_RE.match(text)
            if m and m.group(3) in _UNITS:
                sign, count, unit = m.group(1), int(m.group(2)), m.group(3)
                if count == 0:
                    plan.append(("datetime_noop", None))
                else:
                    plan.append(("datetime_offset", (sign, count, unit)))
                continue
            raise UnsupportedConstructError(
                f"unsupported datetime modifier {mod!r}")

        # a single disabled step keeps the whole call in source form so the
        # failure surfaces at execution instead of silently dropping work
        needed = {family for family, _ in plan}
        if not converted and not any(f in ("datetime_start_of", "datetime_offset")
                                     for f, _ in plan):
            needed.add("datetime_cast")
        for family in needed:
            if not self.enabled(family):
                return call

        if cast_fired:
            self.fire("datetime_cast")
        for family, detail in plan:
            if family == "datetime_start_of":
                self.fire(family)
                base = n.FuncCall(name="DATE_TRUNC",
                                  args=[n.Literal(value=detail, kind="string"), base],
                                  span=call.span)
                converted = True
            elif family == "datetime_offset":
                sign, count, unit = detail
                self.fire(family)
                base = n.BinaryOp(op=sign, left=base,
                                  right=n.IntervalLiteral(n=count, unit=unit),
                                  span=call.span)
                converted = True
            else:
                self.fire("datetime_noop")
        if not converted:
            self.fire("datetime_cast")
            base = n.Cast(operand=base, type_name="TIMESTAMP", span=call.span)
        return base

    def rewrite_strftime(self, call: n.FuncCall) -> n.Node:
        # source order is strftime(format, value, modifier...); the target
        # takes the value first and has no modifier arguments
        args = call.args
        if len(args) < 2:
            return call
        fmt = args[0]
        if not (isinstance(fmt, n.Literal) and fmt.kind == "string"
                and "%" in str(fmt.value)):
            # already value-first: just make sure a bare column is cast
            if len(args) == 2 and isinstance(args[0], n.ColumnRef):
                if self.enabled("datetime_cast"):
                    self.fire("datetime_cast")
                    cast = n.Cast(operand=args[0], type_name="TIMESTAMP",
                                  span=call.span)
                    return n.FuncCall(name="STRFTIME", args=[cast, args[1]],
                                      span=call.span)
            return call
        if len(args) == 2:
            value = args[1]
            if isinstance(value, n.ColumnRef):
                if not self.enabled("datetime_cast"):
                    return call
                self.fire("datetime_cast")
                value = n.Cast(operand=value, type_name="TIMESTAMP", span=call.span)
        else:
            inner = n.FuncCall(name="DATETIME", args=list(args[1:]), span=call.span)
            value = self.rewrite_datetime(inner)
            if value is inner or (isinstance(value, n.FuncCall)
                                  and value.name == "DATETIME"):
                return call  # a disabled family kept the source form
        self.changed = True
        return n.FuncCall(name="STRFTIME", args=[value, fmt], span=call.span)


def transpile_tree(tree: n.Select,
                   disabled_families: frozenset[str] = frozenset()) -> tuple[n.Select, list[str]]:
    """Rewrite a parsed source-dialect tree into the target dialect.

    Returns the rewritten tree and the rule families applied, in
    application order. Raises UnsupportedConstructError for datetime
    modifiers outside the rule families.
    """
    applied: list[str] = []
    for _ in range(10):
        rewriter = _Rewriter(frozenset(disabled_families))
        tree = rewriter.rewrite(tree)
        applied.extend(rewriter.applied)
        if not rewriter.changed:
            return tree, applied
    raise MetasqlError("dialect rewrite did not reach a fixpoint")


def transpile(sql: str,
              disabled_families: frozenset[str] = frozenset()) -> TranspiledQuery:
    """Translate one source-dialect SELECT into target-dialect text.

    Parameters
    ----------
    sql:
        Source statement.
    disabled_families:
        Rule families to switch off; used by the mutation tests to show
        every family carries weight. Constructs whose family is disabled
        stay in source form.
    """
    tree = parse_sql(sql, dialect="source")
    rewritten, applied = transpile_tree(tree, disabled_families)
    return TranspiledQuery(sql=render_sql(rewritten), applied_rules=applied)

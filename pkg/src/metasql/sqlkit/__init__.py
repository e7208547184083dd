"""SQL tooling: tokenizer, recursive-descent parser, canonical renderer,
dialect translation rules, and the lowering pass used by the embedded
execution engine."""
from .parser import parse_sql
from .render import render_sql
from .transpile import RULE_FAMILIES, TranspiledQuery, transpile

__all__ = [
    "RULE_FAMILIES",
    "TranspiledQuery",
    "parse_sql",
    "render_sql",
    "transpile",
]

"""Hand-rolled lexer and recursive-descent parser for a SELECT subset.

The grammar covers what clinical question-answering workloads actually
produce: single SELECT statements with joins, subqueries (scalar, IN,
EXISTS, derived tables), CTEs, set operations, CASE, CAST, aggregate and
scalar function calls, and INTERVAL literals. Anything else raises
SqlParseError with the source position.

Both dialects share one grammar; dialect differences are semantic and are
handled by the transpiler and the engine lowering pass, not here.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import SqlParseError
from . import nodes as n

KEYWORDS = {
    "SELECT", "FROM", "WHERE", "GROUP", "BY", "HAVING", "ORDER", "LIMIT",
    "OFFSET", "AS", "ON", "JOIN", "INNER", "LEFT", "RIGHT", "FULL", "OUTER",
    "CROSS", "AND", "OR", "NOT", "IN", "IS", "NULL", "LIKE", "BETWEEN",
    "EXISTS", "CASE", "WHEN", "THEN", "ELSE", "END", "CAST", "DISTINCT",
    "ALL", "UNION", "INTERSECT", "EXCEPT", "WITH", "ASC", "DESC", "INTERVAL",
    "TRUE", "FALSE", "CURRENT_TIME", "CURRENT_TIMESTAMP", "CURRENT_DATE",
}

# keywords that may never be consumed as a bare alias
_NON_ALIAS = KEYWORDS - {"TRUE", "FALSE"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>--[^\n]*)
  | (?P<number>\d+(\.\d*)?([eE][+-]?\d+)?|\.\d+([eE][+-]?\d+)?)
  | (?P<string>'(?:[^']|'')*')
  | (?P<bident>`[^`]+`)
  | (?P<dident>"[^"]+")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><>|!=|<=|>=|\|\||==|[=<>+\-*/%])
  | (?P<punct>[(),.;])
    """,
    re.VERBOSE,
)


@dataclass
class Token:
    kind: str  # IDENT | QIDENT | STRING | NUMBER | OP | PUNCT | EOF
    text: str
    upper: str
    line: int
    col: int


def tokenize(sql: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(sql):
        m = _TOKEN_RE.match(sql, pos)
        if m is None:
            col = pos - line_start + 1
            raise SqlParseError(f"unexpected character {sql[pos]!r}", line, col)
        col = pos - line_start + 1
        kind = m.lastgroup
        text = m.group()
        if kind in ("ws", "comment"):
            nl = text.count("\n")
            if nl:
                line += nl
                line_start = pos + text.rindex("\n") + 1
        elif kind == "bident" or kind == "dident":
            tokens.append(Token("QIDENT", text[1:-1], text[1:-1].upper(), line, col))
        elif kind == "ident":
            tokens.append(Token("IDENT", text, text.upper(), line, col))
        else:
            tokens.append(Token(kind.upper(), text, text.upper(), line, col))
        pos = m.end()
    tokens.append(Token("EOF", "", "", line, len(sql) - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    # -- token plumbing --------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.i + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "EOF":
            self.i += 1
        return tok

    def at_kw(self, *words: str) -> bool:
        tok = self.peek()
        return tok.kind == "IDENT" and tok.upper in words

    def take_kw(self, *words: str) -> bool:
        if self.at_kw(*words):
            self.i += 1
            return True
        return False

    def expect_kw(self, word: str) -> Token:
        tok = self.peek()
        if tok.kind == "IDENT" and tok.upper == word:
            return self.next()
        raise SqlParseError(f"expected {word}, found {tok.text or 'end of input'!r}",
                            tok.line, tok.col)

    def take_punct(self, ch: str) -> bool:
        tok = self.peek()
        if tok.kind == "PUNCT" and tok.text == ch:
            self.i += 1
            return True
        return False

    def expect_punct(self, ch: str) -> Token:
        tok = self.peek()
        if tok.kind == "PUNCT" and tok.text == ch:
            return self.next()
        raise SqlParseError(f"expected {ch!r}, found {tok.text or 'end of input'!r}",
                            tok.line, tok.col)

    def error(self, message: str) -> SqlParseError:
        tok = self.peek()
        return SqlParseError(message, tok.line, tok.col)

    def span(self, tok: Token) -> n.Span:
        return (tok.line, tok.col)

    # -- statements ------------------------------------------------------

    def parse_statement(self) -> n.Select:
        select = self.parse_select()
        self.take_punct(";")
        tok = self.peek()
        if tok.kind != "EOF":
            raise SqlParseError(f"trailing content after statement: {tok.text!r}",
                                tok.line, tok.col)
        return select

    def parse_select(self) -> n.Select:
        start = self.peek()
        ctes: list[n.Cte] = []
        if self.take_kw("WITH"):
            while True:
                name_tok = self.expect_ident("CTE name")
                self.expect_kw("AS")
                self.expect_punct("(")
                inner = self.parse_select()
                self.expect_punct(")")
                ctes.append(n.Cte(name=name_tok.text, select=inner,
                                  span=self.span(name_tok)))
                if not self.take_punct(","):
                    break
        select = self.parse_select_core()
        select.ctes = ctes
        select.span = self.span(start)
        while self.at_kw("UNION", "INTERSECT", "EXCEPT"):
            op = self.next().upper
            all_flag = bool(self.take_kw("ALL"))
            right = self.parse_select_core()
            select.compounds.append((op, all_flag, right))
        if self.take_kw("ORDER"):
            self.expect_kw("BY")
            while True:
                expr = self.parse_expr()
                desc = False
                if self.take_kw("DESC"):
                    desc = True
                else:
                    self.take_kw("ASC")
                select.order_by.append(n.OrderItem(expr=expr, desc=desc))
                if not self.take_punct(","):
                    break
        if self.take_kw("LIMIT"):
            select.limit = self.parse_expr()
            if self.take_kw("OFFSET"):
                select.offset = self.parse_expr()
            elif self.take_punct(","):
                # LIMIT off, count form
                select.offset = select.limit
                select.limit = self.parse_expr()
        return select

    def parse_select_core(self) -> n.Select:
        start = self.expect_kw("SELECT")
        select = n.Select(span=self.span(start))
        if self.take_kw("DISTINCT"):
            select.distinct = True
        else:
            self.take_kw("ALL")
        while True:
            select.items.append(self.parse_select_item())
            if not self.take_punct(","):
                break
        if self.take_kw("FROM"):
            select.from_ = self.parse_table_expr()
        if self.take_kw("WHERE"):
            select.where = self.parse_expr()
        if self.take_kw("GROUP"):
            self.expect_kw("BY")
            while True:
                select.group_by.append(self.parse_expr())
                if not self.take_punct(","):
                    break
        if self.take_kw("HAVING"):
            select.having = self.parse_expr()
        return select

    def parse_select_item(self) -> n.SelectItem:
        tok = self.peek()
        if tok.kind == "OP" and tok.text == "*":
            self.next()
            return n.SelectItem(expr=n.Star(span=self.span(tok)), span=self.span(tok))
        # qualified star: ident . *
        if tok.kind in ("IDENT", "QIDENT") and tok.upper not in _NON_ALIAS \
                and self.peek(1).text == "." and self.peek(2).text == "*":
            self.next(); self.next(); self.next()
            return n.SelectItem(expr=n.Star(table=tok.text, span=self.span(tok)),
                                span=self.span(tok))
        expr = self.parse_expr()
        alias = self.parse_alias()
        return n.SelectItem(expr=expr, alias=alias, span=self.span(tok))

    def parse_alias(self) -> str | None:
        if self.take_kw("AS"):
            return self.expect_ident("alias").text
        tok = self.peek()
        if tok.kind == "QIDENT" or (tok.kind == "IDENT" and tok.upper not in _NON_ALIAS):
            self.next()
            return tok.text
        return None

    def expect_ident(self, what: str) -> Token:
        tok = self.peek()
        if tok.kind == "QIDENT" or (tok.kind == "IDENT" and tok.upper not in _NON_ALIAS):
            return self.next()
        raise SqlParseError(f"expected {what}, found {tok.text or 'end of input'!r}",
                            tok.line, tok.col)

    # -- relations ---------------------------------------------------------

    def parse_table_expr(self) -> n.Node:
        left = self.parse_table_primary()
        while True:
            tok = self.peek()
            if self.take_punct(","):
                right = self.parse_table_primary()
                left = n.Join(left=left, kind="CROSS", right=right, span=self.span(tok))
                continue
            kind = None
            if self.at_kw("JOIN"):
                kind = "INNER"
            elif self.at_kw("INNER", "LEFT", "RIGHT", "FULL", "CROSS"):
                kind = self.next().upper
                self.take_kw("OUTER")
            else:
                break
            self.expect_kw("JOIN")
            right = self.parse_table_primary()
            on = None
            if kind != "CROSS" or self.at_kw("ON"):
                self.expect_kw("ON")
                on = self.parse_expr()
            left = n.Join(left=left, kind=kind, right=right, on=on, span=self.span(tok))
        return left

    def parse_table_primary(self) -> n.Node:
        tok = self.peek()
        if self.take_punct("("):
            if self.at_kw("SELECT", "WITH"):
                select = self.parse_select()
                self.expect_punct(")")
                alias = self.parse_alias()
                if alias is None:
                    raise self.error("derived table requires an alias")
                return n.DerivedTable(select=select, alias=alias, span=self.span(tok))
            # parenthesized join tree
            inner = self.parse_table_expr()
            self.expect_punct(")")
            return inner
        name_tok = self.expect_ident("table name")
        name = name_tok.text
        # tolerate schema-qualified names: keep the last path segment
        while self.peek().text == "." and self.peek(1).kind in ("IDENT", "QIDENT"):
            self.next()
            name = self.next().text
        alias = self.parse_alias()
        return n.TableRef(name=name, alias=alias, span=self.span(name_tok))

    # -- expressions -------------------------------------------------------

    def parse_expr(self) -> n.Node:
        return self.parse_or()

    def parse_or(self) -> n.Node:
        left = self.parse_and()
        while self.at_kw("OR"):
            tok = self.next()
            left = n.BinaryOp(op="OR", left=left, right=self.parse_and(),
                              span=self.span(tok))
        return left

    def parse_and(self) -> n.Node:
        left = self.parse_not()
        while self.at_kw("AND"):
            tok = self.next()
            left = n.BinaryOp(op="AND", left=left, right=self.parse_not(),
                              span=self.span(tok))
        return left

    def parse_not(self) -> n.Node:
        if self.at_kw("NOT") and self.peek(1).upper != "EXISTS":
            tok = self.next()
            return n.UnaryOp(op="NOT", operand=self.parse_not(), span=self.span(tok))
        return self.parse_predicate()

    def parse_predicate(self) -> n.Node:
        left = self.parse_additive()
        while True:
            tok = self.peek()
            if tok.kind == "OP" and tok.text in ("=", "==", "!=", "<>", "<", "<=", ">", ">="):
                self.next()
                op = "=" if tok.text == "==" else ("!=" if tok.text == "<>" else tok.text)
                left = n.BinaryOp(op=op, left=left, right=self.parse_additive(),
                                  span=self.span(tok))
                continue
            if self.at_kw("IS"):
                self.next()
                negated = bool(self.take_kw("NOT"))
                self.expect_kw("NULL")
                left = n.IsNull(operand=left, negated=negated, span=self.span(tok))
                continue
            negated = False
            if self.at_kw("NOT") and self.peek(1).upper in ("IN", "BETWEEN", "LIKE"):
                self.next()
                negated = True
            if self.take_kw("IN"):
                self.expect_punct("(")
                if self.at_kw("SELECT", "WITH"):
                    sub = self.parse_select()
                    self.expect_punct(")")
                    left = n.InExpr(operand=left, negated=negated, subquery=sub,
                                    span=self.span(tok))
                else:
                    items = [self.parse_expr()]
                    while self.take_punct(","):
                        items.append(self.parse_expr())
                    self.expect_punct(")")
                    left = n.InExpr(operand=left, negated=negated, items=items,
                                    span=self.span(tok))
                continue
            if self.take_kw("BETWEEN"):
                low = self.parse_additive()
                self.expect_kw("AND")
                high = self.parse_additive()
                left = n.Between(operand=left, negated=negated, low=low, high=high,
                                 span=self.span(tok))
                continue
            if self.take_kw("LIKE"):
                left = n.LikeOp(operand=left, negated=negated,
                                pattern=self.parse_additive(), span=self.span(tok))
                continue
            if negated:
                raise self.error("expected IN, BETWEEN, or LIKE after NOT")
            return left

    def parse_additive(self) -> n.Node:
        left = self.parse_multiplicative()
        while True:
            tok = self.peek()
            if tok.kind == "OP" and tok.text in ("+", "-", "||"):
                self.next()
                left = n.BinaryOp(op=tok.text, left=left,
                                  right=self.parse_multiplicative(), span=self.span(tok))
            else:
                return left

    def parse_multiplicative(self) -> n.Node:
        left = self.parse_unary()
        while True:
            tok = self.peek()
            if tok.kind == "OP" and tok.text in ("*", "/", "%"):
                self.next()
                left = n.BinaryOp(op=tok.text, left=left, right=self.parse_unary(),
                                  span=self.span(tok))
            else:
                return left

    def parse_unary(self) -> n.Node:
        tok = self.peek()
        if tok.kind == "OP" and tok.text in ("-", "+"):
            self.next()
            operand = self.parse_unary()
            if tok.text == "-" and isinstance(operand, n.Literal) \
                    and operand.kind in ("integer", "float"):
                operand.value = -operand.value  # fold simple negative literals
                return operand
            return n.UnaryOp(op=tok.text, operand=operand, span=self.span(tok))
        return self.parse_primary()

    def parse_primary(self) -> n.Node:
        tok = self.peek()
        span = self.span(tok)

        if tok.kind == "NUMBER":
            self.next()
            if "." in tok.text or "e" in tok.text or "E" in tok.text:
                return n.Literal(value=float(tok.text), kind="float", span=span)
            return n.Literal(value=int(tok.text), kind="integer", span=span)
        if tok.kind == "STRING":
            self.next()
            return n.Literal(value=tok.text[1:-1].replace("''", "'"),
                             kind="string", span=span)
        if tok.kind == "PUNCT" and tok.text == "(":
            self.next()
            if self.at_kw("SELECT", "WITH"):
                sub = self.parse_select()
                self.expect_punct(")")
                return n.ScalarSubquery(select=sub, span=span)
            inner = self.parse_expr()
            self.expect_punct(")")
            return inner

        if tok.kind == "IDENT":
            word = tok.upper
            if word == "NULL":
                self.next()
                return n.Literal(value=None, kind="null", span=span)
            if word in ("TRUE", "FALSE"):
                self.next()
                return n.Literal(value=(word == "TRUE"), kind="bool", span=span)
            if word in ("CURRENT_TIME", "CURRENT_TIMESTAMP", "CURRENT_DATE"):
                self.next()
                if self.take_punct("("):
                    self.expect_punct(")")
                return n.Keyword(name=word, span=span)
            if word == "CAST":
                self.next()
                self.expect_punct("(")
                operand = self.parse_expr()
                self.expect_kw("AS")
                type_name = self.parse_type_name()
                self.expect_punct(")")
                return n.Cast(operand=operand, type_name=type_name, span=span)
            if word == "CASE":
                return self.parse_case()
            if word == "EXISTS" or (word == "NOT" and self.peek(1).upper == "EXISTS"):
                negated = word == "NOT"
                self.next()
                if negated:
                    self.next()
                self.expect_punct("(")
                sub = self.parse_select()
                self.expect_punct(")")
                return n.Exists(negated=negated, subquery=sub, span=span)
            if word == "INTERVAL":
                return self.parse_interval()
            if word in _NON_ALIAS:
                raise SqlParseError(f"unexpected keyword {tok.text}", tok.line, tok.col)

        if tok.kind in ("IDENT", "QIDENT"):
            self.next()
            if self.peek().text == "(" and tok.kind == "IDENT":
                return self.parse_func_tail(tok)
            if self.take_punct("."):
                col = self.expect_ident("column name")
                return n.ColumnRef(name=col.text, table=tok.text, span=span)
            return n.ColumnRef(name=tok.text, span=span)

        raise SqlParseError(f"unexpected token {tok.text or 'end of input'!r}",
                            tok.line, tok.col)

    def parse_func_tail(self, name_tok: Token) -> n.FuncCall:
        span = self.span(name_tok)
        self.expect_punct("(")
        # function names are case-insensitive; normalize so rendered text
        # round-trips to an equal tree
        call = n.FuncCall(name=name_tok.upper, span=span)
        if self.take_punct(")"):
            return call
        if self.peek().text == "*" and self.peek().kind == "OP":
            self.next()
            call.star = True
            self.expect_punct(")")
            return call
        if self.take_kw("DISTINCT"):
            call.distinct = True
        call.args.append(self.parse_expr())
        while self.take_punct(","):
            call.args.append(self.parse_expr())
        self.expect_punct(")")
        return call

    def parse_case(self) -> n.CaseWhen:
        tok = self.expect_kw("CASE")
        case = n.CaseWhen(span=self.span(tok))
        if not self.at_kw("WHEN"):
            case.operand = self.parse_expr()
        while self.take_kw("WHEN"):
            cond = self.parse_expr()
            self.expect_kw("THEN")
            case.whens.append((cond, self.parse_expr()))
        if not case.whens:
            raise self.error("CASE requires at least one WHEN branch")
        if self.take_kw("ELSE"):
            case.else_ = self.parse_expr()
        self.expect_kw("END")
        return case

    def parse_interval(self) -> n.IntervalLiteral:
        tok = self.expect_kw("INTERVAL")
        span = self.span(tok)
        nxt = self.peek()
        if nxt.kind == "STRING":
            self.next()
            body = nxt.text[1:-1].strip()
            m = re.fullmatch(r"([+-]?\d+)\s+([A-Za-z]+)", body)
            if m is None:
                raise SqlParseError(f"malformed INTERVAL literal {body!r}",
                                    nxt.line, nxt.col)
            count, unit = int(m.group(1)), m.group(2)
        elif nxt.kind == "NUMBER" and "." not in nxt.text:
            self.next()
            count = int(nxt.text)
            unit = self.expect_ident("interval unit").text
        else:
            raise SqlParseError("expected interval quantity",
                                nxt.line, nxt.col)
        unit = unit.lower().rstrip("s") or "s"
        if unit not in ("year", "month", "day", "hour", "minute", "second"):
            raise SqlParseError(f"unsupported interval unit {unit!r}",
                                nxt.line, nxt.col)
        return n.IntervalLiteral(n=count, unit=unit, span=span)

    def parse_type_name(self) -> str:
        parts = [self.expect_ident("type name").upper]
        while self.peek().kind == "IDENT" and self.peek().upper not in _NON_ALIAS \
                and self.peek(1).text in (")", "("):
            parts.append(self.next().upper)
        name = " ".join(parts)
        if self.take_punct("("):
            args = [self.next().text]
            while self.take_punct(","):
                args.append(self.next().text)
            self.expect_punct(")")
            name += "(" + ", ".join(args) + ")"
        return name


def parse_sql(sql: str, dialect: str = "target") -> n.Select:
    """Parse a single SELECT statement into a syntax tree.

    Parameters
    ----------
    sql:
        Statement text. Exactly one statement; a trailing semicolon is
        allowed.
    dialect:
        "source" or "target". The grammar is shared; the tag exists so
        error messages can say which side rejected the text.

    Raises
    ------
    SqlParseError
        On any token or grammar error, carrying line/column.
    """
    if dialect not in ("source", "target"):
        raise ValueError(f"unknown dialect {dialect!r}")
    if not sql or not sql.strip():
        raise SqlParseError("empty statement")
    return _Parser(tokenize(sql)).parse_statement()

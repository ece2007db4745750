"""Recursive-descent parser for the SQL fragment.

Grammar (keywords case-insensitive, identifiers case-sensitive, ``--`` comments)::

    query    := SELECT items [FROM tables] [WHERE formula] [GROUP BY cols] [;]
    items    := '*' | item (',' item)*
    item     := (aggregate | expr) [AS ident]
    tables   := ident [[AS] ident] (',' ...)*
    formula  := conj (OR conj)*
    conj     := neg (AND neg)*
    neg      := NOT neg | atom
    atom     := '(' formula ')' | ident MISSING ident
              | expr IS [NOT] NULL | expr NOT IN '(' SELECT ident FROM ident ')'
              | expr cmp expr
    expr     := term (('+' | '-' | '||') term)*
    term     := factor (('*' | '/') factor)*
    factor   := literal | ident ['.' ident] | '(' expr ')' | '-' number
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from colsem.errors import DialectError, SqlSyntaxError
from colsem.sql.ast import (
    AGGREGATE_FUNCS,
    COMPARISON_OPS,
    Aggregate,
    And,
    ColumnRef,
    Constant,
    FunctionApp,
    IsNull,
    Missing,
    Not,
    NotIn,
    Or,
    Predicate,
    Query,
    SelectItem,
    Star,
    Subquery,
    TableRef,
)

CS = "CS"
THREE_VL = "3VL"
DIALECTS = (CS, THREE_VL)

KEYWORDS = {
    "SELECT", "FROM", "WHERE", "GROUP", "BY", "AS", "AND", "OR", "NOT", "IS",
    "NULL", "MISSING", "IN", "TRUE", "FALSE", *AGGREGATE_FUNCS,
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|--[^\n]*)
  | (?P<number>\d+\.\d*(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+|\.\d+(?:[eE][+-]?\d+)?|\d+)
  | (?P<string>"(?:[^"]|"")*"|'(?:[^']|'')*')
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<symbol><>|<=|>=|!=|\|\||[=<>+\-*/(),.;])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # number, string, ident, keyword, symbol, eof
    text: str
    line: int
    column: int


def tokenize(text: str) -> list:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise SqlSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        value = m.group()
        if kind != "ws":
            if kind == "ident" and value.upper() in KEYWORDS:
                kind, value = "keyword", value.upper()
            if kind == "symbol" and value == "!=":
                value = "<>"
            tokens.append(Token(kind, value, line, pos - line_start + 1))
        newlines = value.count("\n") if kind in ("ws", "string") else 0
        if newlines:
            line += newlines
            line_start = m.start() + m.group().rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Backtrack(Exception):
    pass


class Parser:
    def __init__(self, text: str, dialect: str = CS):
        if dialect not in DIALECTS:
            raise ValueError(f"unknown dialect {dialect!r}")
        self.dialect = dialect
        self.tokens = tokenize(text)
        self.pos = 0

    # -- token plumbing --

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset=1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tok
        self.pos = min(self.pos + 1, len(self.tokens) - 1)
        return tok

    def at(self, kind, text=None) -> bool:
        return self.tok.kind == kind and (text is None or self.tok.text == text)

    def at_keyword(self, *words) -> bool:
        return self.tok.kind == "keyword" and self.tok.text in words

    def accept(self, kind, text=None):
        if self.at(kind, text):
            return self.advance()
        return None

    def expect(self, kind, text=None) -> Token:
        if not self.at(kind, text):
            want = text or kind
            got = self.tok.text or "end of input"
            self.error(f"expected {want}, found {got!r}")
        return self.advance()

    def error(self, message):
        raise SqlSyntaxError(message, self.tok.line, self.tok.column)

    # -- statements --

    def parse_query(self) -> Query:
        self.expect("keyword", "SELECT")
        exprs, aggs = self.parse_items()
        tables = ()
        if self.accept("keyword", "FROM"):
            tables = self.parse_tables()
        where = None
        if self.accept("keyword", "WHERE"):
            where = self.parse_formula()
        group_by = ()
        if self.accept("keyword", "GROUP"):
            self.expect("keyword", "BY")
            group_by = self.parse_group_by()
        self.accept("symbol", ";")
        if not self.at("eof"):
            self.error(f"unexpected {self.tok.text!r}")
        return Query(exprs, aggs, tables, where, group_by)

    def parse_items(self):
        if self.accept("symbol", "*"):
            return (SelectItem(Star()),), ()
        exprs, aggs = [], []
        while True:
            if self.at_keyword(*AGGREGATE_FUNCS):
                target, node = aggs, self.parse_aggregate()
            else:
                target, node = exprs, self.parse_expr()
            alias = None
            if self.accept("keyword", "AS"):
                alias = self.expect("ident").text
            target.append(SelectItem(node, alias))
            if not self.accept("symbol", ","):
                return tuple(exprs), tuple(aggs)

    def parse_aggregate(self) -> Aggregate:
        func = self.advance().text
        self.expect("symbol", "(")
        if func == "COUNT" and self.accept("symbol", "*"):
            arg = None
        else:
            arg = self.parse_expr()
        self.expect("symbol", ")")
        return Aggregate(func, arg)

    def parse_tables(self) -> tuple:
        tables = []
        while True:
            name = self.expect("ident").text
            alias = None
            if self.accept("keyword", "AS"):
                alias = self.expect("ident").text
            elif self.at("ident"):
                alias = self.advance().text
            tables.append(TableRef(name, alias))
            if not self.accept("symbol", ","):
                return tuple(tables)

    def parse_group_by(self) -> tuple:
        cols = []
        while True:
            expr = self.parse_expr()
            if not isinstance(expr, ColumnRef):
                self.error("GROUP BY accepts column references only")
            cols.append(expr)
            if not self.accept("symbol", ","):
                return tuple(cols)

    # -- formulas --

    def parse_formula(self):
        node = self.parse_conjunction()
        while self.accept("keyword", "OR"):
            node = Or(node, self.parse_conjunction())
        return node

    def parse_conjunction(self):
        node = self.parse_negation()
        while self.accept("keyword", "AND"):
            node = And(node, self.parse_negation())
        return node

    def parse_negation(self):
        if self.at_keyword("NOT"):
            self.advance()
            return Not(self.parse_negation())
        return self.parse_atom()

    def parse_atom(self):
        if self.at("symbol", "("):
            start = self.pos
            try:
                self.advance()
                inner = self.parse_formula()
                if not self.accept("symbol", ")"):
                    raise _Backtrack
                # "(a + b) = c" parses as an expression, not a nested formula
                if self.tok.kind == "symbol" and self.tok.text in COMPARISON_OPS + ("+", "-", "*", "/", "||"):
                    raise _Backtrack
                if self.at_keyword("IS") or (self.at_keyword("NOT") and self.peek().text == "IN"):
                    raise _Backtrack
                return inner
            except (_Backtrack, SqlSyntaxError):
                self.pos = start
        if self.at("ident") and self.peek().kind == "keyword" and self.peek().text == "MISSING":
            tok = self.advance()
            self.advance()
            attr = self.expect("ident").text
            if self.dialect != CS:
                raise DialectError("MISSING", self.dialect)
            return Missing(tok.text, attr)
        lhs = self.parse_expr()
        if self.at_keyword("IS"):
            self.advance()
            negated = bool(self.accept("keyword", "NOT"))
            self.expect("keyword", "NULL")
            if self.dialect != THREE_VL:
                raise DialectError("IS NULL", self.dialect)
            node = IsNull(lhs)
            return Not(node) if negated else node
        if self.at_keyword("NOT"):
            self.advance()
            self.expect("keyword", "IN")
            self.expect("symbol", "(")
            self.expect("keyword", "SELECT")
            column = self.expect("ident").text
            self.expect("keyword", "FROM")
            table = self.expect("ident").text
            self.expect("symbol", ")")
            return NotIn(lhs, Subquery(column, table))
        if self.tok.kind == "symbol" and self.tok.text in COMPARISON_OPS:
            op = self.advance().text
            return Predicate(op, lhs, self.parse_expr())
        self.error(f"expected a comparison, found {self.tok.text or 'end of input'!r}")

    # -- expressions --

    def parse_expr(self):
        node = self.parse_term()
        while self.tok.kind == "symbol" and self.tok.text in ("+", "-", "||"):
            op = self.advance().text
            node = FunctionApp(op, (node, self.parse_term()))
        return node

    def parse_term(self):
        node = self.parse_factor()
        while self.tok.kind == "symbol" and self.tok.text in ("*", "/"):
            op = self.advance().text
            node = FunctionApp(op, (node, self.parse_factor()))
        return node

    def parse_factor(self):
        tok = self.tok
        if tok.kind == "number":
            self.advance()
            return Constant(_number(tok.text))
        if tok.kind == "symbol" and tok.text == "-" and self.peek().kind == "number":
            self.advance()
            return Constant(-_number(self.advance().text))
        if tok.kind == "string":
            self.advance()
            quote = tok.text[0]
            return Constant(tok.text[1:-1].replace(quote * 2, quote))
        if tok.kind == "keyword" and tok.text in ("TRUE", "FALSE"):
            self.advance()
            return Constant(tok.text == "TRUE")
        if tok.kind == "keyword" and tok.text == "NULL":
            self.error("NULL literals are not part of the fragment")
        if tok.kind == "ident":
            self.advance()
            if self.accept("symbol", "."):
                return ColumnRef(tok.text, self.expect("ident").text)
            return ColumnRef(None, tok.text)
        if self.accept("symbol", "("):
            node = self.parse_expr()
            self.expect("symbol", ")")
            return node
        self.error(f"unexpected {tok.text or 'end of input'!r}")


def _number(text: str):
    if any(c in text for c in ".eE"):
        return float(text)
    return int(text)


def parse(text: str, dialect: str = CS, catalog=None) -> Query:
    """Parse one statement; bind it against ``catalog`` when one is given."""
    query = Parser(text, dialect).parse_query()
    if catalog is not None:
        from colsem.sql.binder import bind

        query = bind(query, catalog)
    return query


def parse_formula(text: str, dialect: str = CS):
    p = Parser(text, dialect)
    node = p.parse_formula()
    if not p.at("eof"):
        p.error(f"unexpected {p.tok.text!r}")
    return node

"""Immutable AST for the supported SQL fragment.

All nodes are frozen dataclasses holding tuples, so structural equality is
plain ``==`` and nodes can be used as dict keys.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Union

ARITH_OPS = ("+", "-", "*", "/", "||")
COMPARISON_OPS = ("=", "<>", "<", "<=", ">", ">=")
AGGREGATE_FUNCS = ("COUNT", "SUM", "MIN", "MAX", "AVG")

NEGATED_COMPARISON = {"=": "<>", "<>": "=", "<": ">=", ">=": "<", ">": "<=", "<=": ">"}


# -- expressions --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Constant:
    value: object

    def _key(self):
        return (type(self.value), self.value)

    def __eq__(self, other):
        return isinstance(other, Constant) and self._key() == other._key()

    def __hash__(self):
        return hash(("Constant",) + self._key())


@dataclass(frozen=True)
class ColumnRef:
    table: Optional[str]
    attr: str

    def __str__(self):
        return f"{self.table}.{self.attr}" if self.table else self.attr


@dataclass(frozen=True)
class FunctionApp:
    op: str
    args: tuple

    def __post_init__(self):
        if self.op not in ARITH_OPS:
            raise ValueError(f"unknown operator {self.op!r}")
        if len(self.args) != 2:
            raise ValueError(f"operator {self.op!r} takes 2 arguments, got {len(self.args)}")


Expression = Union[Constant, ColumnRef, FunctionApp]


@dataclass(frozen=True)
class Star:
    """``SELECT *`` placeholder; removed by the binder."""


@dataclass(frozen=True)
class Aggregate:
    func: str
    arg: Optional[Expression] = None

    def __post_init__(self):
        if self.func not in AGGREGATE_FUNCS:
            raise ValueError(f"unknown aggregate {self.func!r}")
        if self.arg is None and self.func != "COUNT":
            raise ValueError("only COUNT accepts *")

    @property
    def star(self) -> bool:
        return self.arg is None


@dataclass(frozen=True)
class SelectItem:
    expr: Union[Expression, Aggregate, Star]
    alias: Optional[str] = None


@dataclass(frozen=True)
class TableRef:
    name: str
    alias: Optional[str] = None

    @property
    def ref(self) -> str:
        """The name column references use for this FROM entry."""
        return self.alias or self.name


# -- formulas -----------------------------------------------------------------


@dataclass(frozen=True)
class Predicate:
    op: str
    lhs: Expression
    rhs: Expression

    def __post_init__(self):
        if self.op not in COMPARISON_OPS:
            raise ValueError(f"unknown comparison {self.op!r}")


@dataclass(frozen=True)
class IsNull:
    expr: Expression


@dataclass(frozen=True)
class Missing:
    table: str
    attr: str


@dataclass(frozen=True)
class Subquery:
    """``SELECT column FROM table``; the only subquery shape supported."""

    column: str
    table: str


@dataclass(frozen=True)
class NotIn:
    expr: Expression
    subquery: Subquery


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Not:
    arg: "Formula"


Formula = Union[Predicate, IsNull, Missing, NotIn, And, Or, Not]
ATOMS = (Predicate, IsNull, Missing, NotIn)


@dataclass(frozen=True)
class Query:
    select_exprs: tuple = ()
    select_aggs: tuple = ()
    from_: tuple = ()
    where: Optional[Formula] = None
    group_by: tuple = ()

    @property
    def is_aggregate(self) -> bool:
        return bool(self.select_aggs) or bool(self.group_by)

    def items(self) -> tuple:
        return self.select_exprs + self.select_aggs


# -- helpers ------------------------------------------------------------------


def conjoin(*formulas):
    """Left-deep AND of the non-None arguments, or None when there are none."""
    out = None
    for f in formulas:
        if f is None:
            continue
        out = f if out is None else And(out, f)
    return out


def disjoin(*formulas):
    out = None
    for f in formulas:
        if f is None:
            continue
        out = f if out is None else Or(out, f)
    return out


def conjuncts(formula) -> list:
    if formula is None:
        return []
    if isinstance(formula, And):
        return conjuncts(formula.left) + conjuncts(formula.right)
    return [formula]


def children(node) -> tuple:
    if isinstance(node, FunctionApp):
        return node.args
    if isinstance(node, Aggregate):
        return () if node.arg is None else (node.arg,)
    if isinstance(node, SelectItem):
        return (node.expr,)
    if isinstance(node, Predicate):
        return (node.lhs, node.rhs)
    if isinstance(node, (IsNull, NotIn)):
        return (node.expr,)
    if isinstance(node, (And, Or)):
        return (node.left, node.right)
    if isinstance(node, Not):
        return (node.arg,)
    if isinstance(node, Query):
        return (
            node.select_exprs
            + node.select_aggs
            + node.from_
            + ((node.where,) if node.where is not None else ())
            + node.group_by
        )
    return ()


def walk(node) -> Iterator:
    """Pre-order traversal over every node, the root included."""
    yield node
    for child in children(node):
        yield from walk(child)


def column_refs(node) -> list:
    """Column references in first-occurrence order, duplicates kept.

    ``Missing`` nodes name an attribute but are not value references.
    """
    return [n for n in walk(node) if isinstance(n, ColumnRef)]


def node_count(node) -> int:
    """Size measure used by the linear-size check.

    SelectItem wrappers and Subquery payloads are not counted; every other
    node, including TableRefs and the Query itself, counts as one.
    """
    return sum(1 for n in walk(node) if not isinstance(n, SelectItem))

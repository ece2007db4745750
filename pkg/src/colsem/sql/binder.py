"""Name resolution: qualify column references and expand ``SELECT *``."""

from __future__ import annotations

from typing import Mapping, Sequence

from colsem.errors import BindError, UnknownAttribute, UnknownTable, UnresolvedColumn
from colsem.sql.ast import (
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
    column_refs,
)


def catalog_attrs(catalog) -> dict:
    """Normalize a catalog to ``{relation name: tuple of attribute names}``.

    Accepts a ``Database``, or a mapping whose values are attribute names or
    ``(name, type)`` pairs.
    """
    if hasattr(catalog, "catalog"):
        catalog = catalog.catalog()
    out = {}
    for name, attrs in catalog.items():
        out[name] = tuple(a if isinstance(a, str) else a[0] for a in attrs)
    return out


class Binder:
    def __init__(self, catalog: Mapping[str, Sequence]):
        self.catalog = catalog_attrs(catalog)

    def bind(self, q: Query) -> Query:
        scope = {}
        for t in q.from_:
            if t.name not in self.catalog:
                raise UnknownTable(f"unknown table {t.name!r}")
            if t.ref in scope:
                raise BindError(f"table reference {t.ref!r} appears twice in FROM")
            scope[t.ref] = self.catalog[t.name]
        self.scope = scope

        exprs = []
        for item in q.select_exprs:
            if isinstance(item.expr, Star):
                for t in q.from_:
                    exprs.extend(SelectItem(ColumnRef(t.ref, a)) for a in scope[t.ref])
            else:
                exprs.append(SelectItem(self.expr(item.expr), item.alias))
        aggs = [SelectItem(self.expr(i.expr), i.alias) for i in q.select_aggs]
        where = None if q.where is None else self.formula(q.where)
        group_by = tuple(self.expr(c) for c in q.group_by)

        bound = Query(tuple(exprs), tuple(aggs), q.from_, where, group_by)
        if bound.is_aggregate:
            keys = set(group_by)
            for item in bound.select_exprs:
                for ref in column_refs(item.expr):
                    if ref not in keys:
                        raise BindError(f"{ref} must appear in GROUP BY")
        return bound

    def column(self, ref: ColumnRef) -> ColumnRef:
        if ref.table is None:
            owners = [t for t, attrs in self.scope.items() if ref.attr in attrs]
            if len(owners) != 1:
                what = "no" if not owners else "more than one"
                raise UnresolvedColumn(f"column {ref.attr!r} matches {what} FROM entry")
            return ColumnRef(owners[0], ref.attr)
        if ref.table not in self.scope:
            raise UnresolvedColumn(f"{ref} does not match any FROM entry")
        if ref.attr not in self.scope[ref.table]:
            raise UnknownAttribute(f"{ref.table!r} has no attribute {ref.attr!r}")
        return ref

    def expr(self, node):
        if isinstance(node, Constant):
            return node
        if isinstance(node, ColumnRef):
            return self.column(node)
        if isinstance(node, FunctionApp):
            return FunctionApp(node.op, tuple(self.expr(a) for a in node.args))
        if isinstance(node, Aggregate):
            return node if node.star else Aggregate(node.func, self.expr(node.arg))
        raise TypeError(f"not an expression: {node!r}")

    def formula(self, node):
        if isinstance(node, Predicate):
            return Predicate(node.op, self.expr(node.lhs), self.expr(node.rhs))
        if isinstance(node, IsNull):
            return IsNull(self.expr(node.expr))
        if isinstance(node, Missing):
            ref = self.column(ColumnRef(node.table, node.attr))
            return Missing(ref.table, ref.attr)
        if isinstance(node, NotIn):
            return NotIn(self.expr(node.expr), node.subquery)
        if isinstance(node, And):
            return And(self.formula(node.left), self.formula(node.right))
        if isinstance(node, Or):
            return Or(self.formula(node.left), self.formula(node.right))
        if isinstance(node, Not):
            return Not(self.formula(node.arg))
        raise TypeError(f"not a formula: {node!r}")


def bind(q: Query, catalog) -> Query:
    """Resolve every column reference against ``catalog``.

    After binding no ``Star`` remains and every ColumnRef names a FROM entry.
    """
    return Binder(catalog).bind(q)

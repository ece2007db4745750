"""Columnar-Semantics expansion and compilation.

A CS query is read as sugar for queries over the normalized relations
``R_id`` / ``R_a``. An atomic predicate is only evaluated when every
attribute it mentions is present for the current tuple. A predicate that
is not evaluated never makes its literal true, so after negations are
pushed to the leaves it counts as FALSE there.

Expanded queries can only join a column relation ``R_a`` when ``a`` is
present, so each output is expanded into *branches*, one per presence
pattern of the attributes the formula mentions. A branch joins ``R_a`` for
present attributes and excludes missing ones with
``R_id.id NOT IN (SELECT id FROM R_a)``. Patterns under which the formula
cannot hold are pruned statically, so purely conjunctive queries such as
``SELECT Address FROM R WHERE R.Author = "Codd"`` expand to a single branch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from colsem.cnf import ID, NormalizedDatabase, NormalizedGroup, column_name, key_name
from colsem.core import Relation, canonical
from colsem.errors import DanglingId
from colsem.evaluate import EvalMode, output_columns, run_query
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
    Subquery,
    TableRef,
    column_refs,
    conjoin,
    disjoin,
    walk,
)
from colsem.sql.binder import bind, catalog_attrs
from colsem.sql.printer import print_query

# -- expansion helpers -------------------------------------------------------


def ids(tables) -> list:
    """Opaque key column of each FROM entry: ``R_id.id`` (alias-based when aliased)."""
    return [ColumnRef(key_name(t.ref), ID) for t in tables]


def rename(node):
    """Rewrite every ``R.a`` to ``R_a.a``. Lists/tuples are mapped elementwise."""
    if isinstance(node, (list, tuple)):
        return type(node)(rename(n) for n in node)
    if isinstance(node, ColumnRef):
        return ColumnRef(column_name(node.table, node.attr), node.attr)
    if isinstance(node, Constant):
        return node
    if isinstance(node, FunctionApp):
        return FunctionApp(node.op, tuple(rename(a) for a in node.args))
    if isinstance(node, Aggregate):
        return node if node.star else Aggregate(node.func, rename(node.arg))
    if isinstance(node, Predicate):
        return Predicate(node.op, rename(node.lhs), rename(node.rhs))
    if isinstance(node, (Missing, NotIn)):
        return node
    if isinstance(node, (And, Or)):
        return type(node)(rename(node.left), rename(node.right))
    if isinstance(node, Not):
        return Not(rename(node.arg))
    raise TypeError(f"cannot rename {node!r}")


def correlation(table: str, attr: str) -> Predicate:
    """``R_id.id = R_a.id``: ties a column entry to its tuple's key."""
    return Predicate("=", ColumnRef(key_name(table), ID), ColumnRef(column_name(table, attr), ID))


def missing_check(table: str, attr: str, base: Optional[str] = None) -> NotIn:
    """``R_id.id NOT IN (SELECT id FROM R_a)``; ``base`` is the catalog name behind an alias."""
    return NotIn(ColumnRef(key_name(table), ID), Subquery(ID, column_name(base or table, attr)))


def desugar_missing(phi, tables: Optional[dict] = None):
    """Replace each ``R MISSING a`` by its NOT IN form. ``tables`` maps alias to relation."""
    tables = tables or {}
    if phi is None:
        return None
    if isinstance(phi, Missing):
        return missing_check(phi.table, phi.attr, tables.get(phi.table))
    if isinstance(phi, (And, Or)):
        return type(phi)(desugar_missing(phi.left, tables), desugar_missing(phi.right, tables))
    if isinstance(phi, Not):
        return Not(desugar_missing(phi.arg, tables))
    return phi


def attributes(node) -> list:
    """Distinct ``(table, attr)`` pairs referenced as values, first-occurrence order."""
    seen = {}
    for ref in column_refs(node):
        seen.setdefault((ref.table, ref.attr), None)
    return list(seen)


def expand_formula(phi, referenced, tables: Optional[dict] = None):
    """Rename ``phi`` and conjoin one correlation predicate per referenced attribute.

    ``referenced`` is an iterable of ``(table, attr)``; duplicates are dropped.
    MISSING nodes are desugared to NOT IN. Returns None when there is nothing to say.
    """
    correlations = [correlation(t, a) for t, a in dict.fromkeys(referenced)]
    body = None if phi is None else desugar_missing(rename(phi), tables)
    return conjoin(*correlations, body)


# -- negation handling --------------------------------------------------------


def nnf(phi):
    """Push NOT down to atoms with De Morgan; cancel double negations."""
    if phi is None:
        return None
    if isinstance(phi, (And, Or)):
        return type(phi)(nnf(phi.left), nnf(phi.right))
    if not isinstance(phi, Not):
        return phi
    inner = phi.arg
    if isinstance(inner, Not):
        return nnf(inner.arg)
    if isinstance(inner, And):
        return Or(nnf(Not(inner.left)), nnf(Not(inner.right)))
    if isinstance(inner, Or):
        return And(nnf(Not(inner.left)), nnf(Not(inner.right)))
    return phi


def simulate_2vl_negation(phi):
    """Make CS behave like two-valued logic on negated predicates.

    After NNF, ``NOT P(R.x, S.y)`` becomes
    ``R MISSING x OR S MISSING y OR NOT P(R.x, S.y)``.
    """

    def rewrite(node):
        if isinstance(node, (And, Or)):
            return type(node)(rewrite(node.left), rewrite(node.right))
        if isinstance(node, Not) and isinstance(node.arg, Predicate):
            guards = [Missing(t, a) for t, a in attributes(node.arg)]
            return disjoin(*guards, node)
        return node

    return None if phi is None else rewrite(nnf(phi))


def guard_for_two_valued(phi):
    """3VL formula to an equivalent formula under two-valued predicate semantics.

    In NNF a negated predicate is only TRUE under 3VL when its arguments are
    non-null, so ``NOT P`` becomes ``NOT (P OR a IS NULL OR ...)``.
    """

    def rewrite(node):
        if isinstance(node, (And, Or)):
            return type(node)(rewrite(node.left), rewrite(node.right))
        if isinstance(node, Not) and isinstance(node.arg, Predicate):
            checks = [IsNull(ColumnRef(t, a)) for t, a in attributes(node.arg)]
            return Not(disjoin(node.arg, *checks)) if checks else node
        return node

    return None if phi is None else rewrite(nnf(phi))


_NEVER = Predicate("=", Constant(0), Constant(1))


def is_null_to_missing(phi):
    """``e IS NULL`` becomes the disjunction of MISSING over the attributes of ``e``."""
    if phi is None:
        return None
    if isinstance(phi, IsNull):
        attrs = attributes(phi.expr)
        return disjoin(*(Missing(t, a) for t, a in attrs)) if attrs else _NEVER
    if isinstance(phi, (And, Or)):
        return type(phi)(is_null_to_missing(phi.left), is_null_to_missing(phi.right))
    if isinstance(phi, Not):
        return Not(is_null_to_missing(phi.arg))
    return phi


def missing_to_is_null(phi):
    if phi is None:
        return None
    if isinstance(phi, Missing):
        return IsNull(ColumnRef(phi.table, phi.attr))
    if isinstance(phi, (And, Or)):
        return type(phi)(missing_to_is_null(phi.left), missing_to_is_null(phi.right))
    if isinstance(phi, Not):
        return Not(missing_to_is_null(phi.arg))
    return phi


def _with_where(q: Query, where) -> Query:
    return Query(q.select_exprs, q.select_aggs, q.from_, where, q.group_by)


def cs_from_3vl(q: Query) -> Query:
    """A CS query whose result, recomposed, equals ``q``'s 3VL result.

    Goes through two-valued logic: guard negated predicates, swap IS NULL
    for MISSING, then apply the negation simulation.
    """
    return _with_where(q, simulate_2vl_negation(is_null_to_missing(guard_for_two_valued(q.where))))


def compile_to_3vl(q: Query, catalog, simulate_2vl: bool = False) -> Query:
    """Standard-SQL query over the original tables with the same meaning as ``q`` under CS.

    Attribute references stay as written and ``R MISSING a`` becomes
    ``R.a IS NULL``. The output is at most twice the size of its input.
    """
    q = bind(q, catalog)
    where = simulate_2vl_negation(q.where) if simulate_2vl else q.where
    return _with_where(q, missing_to_is_null(where))


# -- branch enumeration -------------------------------------------------------

# Literal simplification uses Python True/False as formula constants.


def _specialize(phi, assign: dict):
    """Resolve literals whose attributes have a decided presence; simplify."""
    if phi is True or phi is False:
        return phi
    if isinstance(phi, Predicate) or (isinstance(phi, Not) and isinstance(phi.arg, Predicate)):
        if any(assign.get(a) is False for a in attributes(phi)):
            return False
        return phi
    if isinstance(phi, Missing):
        key = (phi.table, phi.attr)
        return (not assign[key]) if key in assign else phi
    if isinstance(phi, Not) and isinstance(phi.arg, Missing):
        inner = _specialize(phi.arg, assign)
        return (not inner) if isinstance(inner, bool) else phi
    if isinstance(phi, And):
        left = _specialize(phi.left, assign)
        if left is False:
            return False
        right = _specialize(phi.right, assign)
        if right is False:
            return False
        if left is True:
            return right
        if right is True:
            return left
        return And(left, right)
    if isinstance(phi, Or):
        left = _specialize(phi.left, assign)
        if left is True:
            return True
        right = _specialize(phi.right, assign)
        if right is True:
            return True
        if left is False:
            return right
        if right is False:
            return left
        return Or(left, right)
    raise TypeError(f"formula is not in negation normal form: {phi!r}")


def enumerate_branches(phi, forced=(), decide=()) -> list:
    """Presence patterns under which ``phi`` can still hold.

    Returns ``[(assignment, residual formula)]`` where ``assignment`` maps
    ``(table, attr)`` to True (present) / False (missing). Attributes in
    ``forced`` are fixed present; those in ``decide`` are always split on
    even when the formula does not mention them. The patterns are disjoint.
    ``phi`` must be in NNF (or None).
    """
    out = []

    def rec(current, assign):
        if current is False:
            return
        pending = [] if current is True else [a for a in attributes(current) if a not in assign]
        if not pending:
            pending = [a for a in decide if a not in assign]
        if not pending:
            out.append((assign, None if current is True else current))
            return
        attr = pending[0]
        for present in (True, False):
            nxt = {**assign, attr: present}
            rec(_specialize(current, nxt), nxt)

    start = {a: True for a in forced}
    rec(True if phi is None else _specialize(phi, start), start)
    return out


# -- expanded query set -------------------------------------------------------


@dataclass
class Branch:
    """One expanded query and the presence pattern it covers."""

    assignment: dict
    query: Query

    @property
    def present(self) -> list:
        return [a for a, p in self.assignment.items() if p]


@dataclass
class Member:
    """The expanded queries producing one output column (or the key)."""

    name: str
    kind: str  # key | expr | agg
    branches: list
    poison: list = field(default_factory=list)
    combine: Optional[str] = None  # aggregate recombination rule


@dataclass
class ExpandedQuerySet:
    source: Query
    columns: tuple  # (name, type) of the output group
    aggregate: bool
    key: Member
    outputs: list

    def queries(self) -> list:
        out = [b.query for b in self.key.branches]
        for m in self.outputs:
            out.extend(b.query for b in m.branches)
            out.extend(b.query for b in m.poison)
        return out

    def to_sql(self) -> str:
        """Every member query as SQL, separated by ``;`` lines and labelled with comments."""
        chunks = []

        def emit(label, branch):
            pattern = ", ".join(f"{t}.{a}:{'present' if p else 'missing'}" for (t, a), p in branch.assignment.items())
            chunks.append(f"-- {label}" + (f" [{pattern}]" if pattern else "") + "\n" + print_query(branch.query))

        for b in self.key.branches:
            emit("key", b)
        for m in self.outputs:
            for b in m.branches:
                emit(f"output {m.name}", b)
            for b in m.poison:
                emit(f"output {m.name} missing-input check", b)
        return "\n;\n".join(chunks) + "\n"


class Expander:
    def __init__(self, q: Query, catalog):
        self.q = q
        self.attrs = catalog_attrs(catalog)
        self.base = {t.ref: t.name for t in q.from_}

    def from_list(self, assignment: dict) -> tuple:
        present = {a for a, p in assignment.items() if p}
        out = []
        for t in self.q.from_:
            for attr in self.attrs[t.name]:
                if (t.ref, attr) in present:
                    alias = column_name(t.ref, attr) if t.alias else None
                    out.append(TableRef(column_name(t.name, attr), alias))
            out.append(TableRef(key_name(t.name), key_name(t.ref) if t.alias else None))
        return tuple(out)

    def where(self, assignment: dict, residual):
        ordered = []
        for t in self.q.from_:
            for attr in self.attrs[t.name]:
                if (t.ref, attr) in assignment:
                    ordered.append((t.ref, attr))
        present = [a for a in ordered if assignment[a]]
        missing = [missing_check(t, a, self.base[t]) for t, a in ordered if not assignment[t, a]]
        return conjoin(expand_formula(None, present), *missing, expand_formula(residual, (), self.base))

    def branch(self, assignment, residual, items, group_by=()) -> Branch:
        exprs = tuple(i for i in items if not isinstance(i.expr, Aggregate))
        aggs = tuple(i for i in items if isinstance(i.expr, Aggregate))
        where = self.where(assignment, residual)
        return Branch(assignment, Query(exprs, aggs, self.from_list(assignment), where, tuple(group_by)))


def expand(q: Query, catalog, simulate_2vl: bool = False) -> ExpandedQuerySet:
    """The set of expanded queries of a CS query.

    Non-aggregate queries: a key member selecting ``ids`` of the tuples that
    satisfy the WHERE clause, and one member per select expression selecting
    ``ids`` plus the renamed expression.

    Aggregate queries: members group by the renamed GROUP BY attributes that
    are present in the branch and also select ``COUNT(*)`` so that partial
    results from disjoint branches can be recombined. AVG is computed as
    SUM / COUNT(*) for the same reason. "Poison" branches find groups where
    an aggregate's input is missing, which makes that output missing.
    """
    q = bind(q, catalog)
    if q.where is not None and any(isinstance(n, (IsNull, NotIn)) for n in walk(q.where)):
        raise ValueError("expand expects a Columnar-Semantics query (no IS NULL / NOT IN)")
    types = {t.ref: dict(catalog_columns(catalog)[t.name]) for t in q.from_}
    columns = output_columns(q, types)
    where = simulate_2vl_negation(q.where) if simulate_2vl else q.where
    phi = nnf(where)
    ex = Expander(q, catalog)
    key_ids = [SelectItem(r) for r in ids(q.from_)]
    count_star = SelectItem(Aggregate("COUNT"))

    if not q.is_aggregate:
        key_items = key_ids or [count_star]
        key = Member("key", "key", [ex.branch(a, r, key_items) for a, r in enumerate_branches(phi)])
        outputs = []
        for (name, _), item in zip(columns, q.select_exprs):
            renamed = SelectItem(rename(item.expr), item.alias)
            branches = [
                ex.branch(a, r, key_ids + [renamed] if key_ids else [renamed, count_star])
                for a, r in enumerate_branches(phi, forced=attributes(item.expr))
            ]
            outputs.append(Member(name, "expr", branches))
        return ExpandedQuerySet(q, columns, False, key, outputs)

    group_attrs = [(c.table, c.attr) for c in q.group_by]

    def grouped(assignment, residual, extra):
        keys = [c for c in q.group_by if assignment.get((c.table, c.attr))]
        items = [SelectItem(rename(c)) for c in keys] + extra + [count_star]
        return ex.branch(assignment, residual, items, rename(tuple(keys)))

    key = Member("key", "key", [grouped(a, r, []) for a, r in enumerate_branches(phi, decide=group_attrs)])
    outputs = []
    names = iter(columns)
    for item in q.select_exprs:
        name, _ = next(names)
        extra = [SelectItem(rename(item.expr), item.alias)]
        branches = [grouped(a, r, extra) for a, r in enumerate_branches(phi, attributes(item.expr), group_attrs)]
        outputs.append(Member(name, "expr", branches))
    for item in q.select_aggs:
        name, _ = next(names)
        agg = item.expr
        arg_attrs = [] if agg.star else attributes(agg.arg)
        func = "SUM" if agg.func == "AVG" else agg.func
        computed = Aggregate(func, None if agg.star else rename(agg.arg))
        branches = [
            grouped(a, r, [SelectItem(computed, item.alias)])
            for a, r in enumerate_branches(phi, arg_attrs, group_attrs)
        ]
        poison = [
            grouped(a, r, [])
            for a, r in enumerate_branches(phi, decide=group_attrs + arg_attrs)
            if any(a.get(x) is False for x in arg_attrs)
        ]
        combine = "COUNT*" if agg.star else agg.func
        outputs.append(Member(name, "agg", branches, poison, combine))
    return ExpandedQuerySet(q, columns, True, key, outputs)


def catalog_columns(catalog) -> dict:
    """``{relation: ((attr, type), ...)}`` from a Database/NormalizedDatabase/dict."""
    if hasattr(catalog, "catalog"):
        catalog = catalog.catalog()
    return {name: tuple(cols) for name, cols in catalog.items()}


# -- running CS queries -------------------------------------------------------

_MISSING = ("missing", None)


def _run(branch: Branch, flat) -> Relation:
    return run_query(branch.query, flat, EvalMode.NULL_FREE)


def _group_key(q: Query, branch: Branch, row) -> tuple:
    """Full GROUP BY key (missing attributes marked) from a branch row's leading columns."""
    values = iter(row)
    key = []
    for c in q.group_by:
        key.append(canonical(next(values)) if branch.assignment.get((c.table, c.attr)) else _MISSING)
    return tuple(key)


def assemble(es: ExpandedQuerySet, results: dict, name: str = "result") -> NormalizedGroup:
    """Build the output NormalizedGroup from each branch query's result.

    ``results`` maps ``id(branch)`` to the Relation that branch produced.
    """
    q = es.source
    keys = {}

    def mint(k):
        if k not in keys:
            keys[k] = len(keys) + 1
        return keys[k]

    def lookup(k, where):
        if k not in keys:
            raise DanglingId(f"{where}: key {k!r} is not produced by the key member")
        return keys[k]

    column_rows = {}
    if not es.aggregate:
        width = len(q.from_)
        for b in es.key.branches:
            for row in results[id(b)].rows:
                if width:
                    mint(row)
                elif row[0]:
                    mint(())
        for m in es.outputs:
            seen, rows = set(), []
            for b in m.branches:
                for row in results[id(b)].rows:
                    if width:
                        k, value = row[:width], row[width]
                    elif row[1]:
                        k, value = (), row[0]
                    else:
                        continue
                    i = lookup(k, m.name)
                    if i in seen:
                        raise ValueError(f"{m.name}: two values for key {k!r}")
                    seen.add(i)
                    rows.append((i, value))
            column_rows[m.name] = rows
    else:
        if not q.group_by:
            mint(())
        for b in es.key.branches:
            for row in results[id(b)].rows:
                if row[-1] > 0:
                    mint(_group_key(q, b, row))
        for m in es.outputs:
            width = None
            partial = {}
            for b in m.branches:
                width = sum(1 for c in q.group_by if b.assignment.get((c.table, c.attr)))
                for row in results[id(b)].rows:
                    if row[-1] == 0:
                        continue
                    k = _group_key(q, b, row)
                    lookup(k, m.name)
                    partial.setdefault(k, []).append((row[width], row[-1]))
            poisoned = set()
            for b in m.poison:
                for row in results[id(b)].rows:
                    if row[-1] > 0:
                        poisoned.add(_group_key(q, b, row))
            rows = []
            for k, i in keys.items():
                if k in poisoned:
                    continue
                value = _combine(m, partial.get(k, []))
                if value is not None:
                    rows.append((i, value))
            column_rows[m.name] = rows

    columns = es.columns
    key_rel = Relation(key_name(name), ((ID, "int"),), [(i,) for i in keys.values()])
    column_rels = {
        attr: Relation(column_name(name, attr), ((ID, "int"), (attr, typ)), column_rows[attr])
        for attr, typ in columns
    }
    return NormalizedGroup(name, columns, key_rel, column_rels)


def _combine(m: Member, parts: list):
    """Merge partial aggregates ``[(value, row count)]`` from disjoint branches."""
    if m.kind == "expr":
        return parts[0][0] if parts else None
    rule = m.combine
    if rule in ("COUNT*", "COUNT"):
        return sum(v for v, _ in parts)
    if not parts:
        return None
    values = [v for v, _ in parts]
    if rule == "SUM":
        return sum(values)
    if rule == "AVG":
        return sum(values) / sum(n for _, n in parts)
    if rule == "MIN":
        return min(values)
    if rule == "MAX":
        return max(values)
    raise ValueError(f"unknown aggregate {rule!r}")


def run_cs(q: Query, ndb: NormalizedDatabase, simulate_2vl: bool = False, name: str = "result") -> NormalizedGroup:
    """Evaluate a CS query: expand, run every branch null-free over the
    normalized relations, and assemble the output group."""
    es = expand(q, ndb, simulate_2vl)
    flat = ndb.relations()
    results = {}
    for query_branch in _all_branches(es):
        results[id(query_branch)] = _run(query_branch, flat)
    return assemble(es, results, name)


def _all_branches(es: ExpandedQuerySet) -> list:
    out = list(es.key.branches)
    for m in es.outputs:
        out.extend(m.branches)
        out.extend(m.poison)
    return out

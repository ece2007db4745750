"""Reference evaluators: Kleene 3VL, two-valued, and null-free.

All three share one nested-loop engine. They differ only in how a predicate
treats a Null argument. The null-free mode additionally uses hash lookups
for top-level equi-join conjuncts, which expanded queries over normalized
relations need to stay tractable.
"""

from __future__ import annotations

import enum
from collections import defaultdict

from colsem.core import (
    FALSE,
    TRUE,
    UNKNOWN,
    Database,
    Relation,
    TruthValue,
    canonical,
    compare,
    eval_aggregate,
    eval_expression,
    infer_type,
    kleene_and,
    kleene_not,
    kleene_or,
)
from colsem.errors import EvaluationError, NullInNullFreeMode
from colsem.sql.ast import (
    Aggregate,
    And,
    ColumnRef,
    IsNull,
    Missing,
    Not,
    NotIn,
    Or,
    Predicate,
    Query,
    column_refs,
    conjuncts,
)
from colsem.sql.binder import bind


class EvalMode(enum.Enum):
    THREE_VALUED = "3vl"
    TWO_VALUED = "2vl"
    NULL_FREE = "null-free"


def eval_predicate(op: str, left, right, mode: EvalMode) -> TruthValue:
    if left is None or right is None:
        if mode is EvalMode.THREE_VALUED:
            return UNKNOWN
        if mode is EvalMode.TWO_VALUED:
            return FALSE
        raise NullInNullFreeMode(f"Null operand in {left!r} {op} {right!r}")
    return TruthValue.of(compare(op, left, right))


def eval_is_null(value) -> TruthValue:
    return TRUE if value is None else FALSE


def _not_in(value, members: set, has_null: bool, mode: EvalMode) -> TruthValue:
    if mode is EvalMode.NULL_FREE:
        if value is None or has_null:
            raise NullInNullFreeMode("Null operand in NOT IN")
        return TruthValue.of(canonical(value) not in members)
    if mode is EvalMode.TWO_VALUED:
        # IN is a disjunction of equalities, each FALSE on Null
        return TruthValue.of(value is None or canonical(value) not in members)
    if value is None:
        return UNKNOWN if (members or has_null) else TRUE
    if canonical(value) in members:
        return FALSE
    return UNKNOWN if has_null else TRUE


class _Context:
    def __init__(self, db: Database, mode: EvalMode):
        self.db = db
        self.mode = mode
        self._subqueries = {}

    def subquery(self, sub):
        key = (sub.table, sub.column)
        if key not in self._subqueries:
            rel = self.db[sub.table]
            pos = rel.attrs.index(sub.column)
            values = [row[pos] for row in rel.rows]
            members = {canonical(v) for v in values if v is not None}
            self._subqueries[key] = (members, any(v is None for v in values))
        return self._subqueries[key]


def eval_formula(f, binding, ctx: _Context) -> TruthValue:
    mode = ctx.mode
    if isinstance(f, Predicate):
        return eval_predicate(f.op, eval_expression(f.lhs, binding), eval_expression(f.rhs, binding), mode)
    if isinstance(f, And):
        left = eval_formula(f.left, binding, ctx)
        if left is FALSE:
            return FALSE
        return kleene_and(left, eval_formula(f.right, binding, ctx))
    if isinstance(f, Or):
        left = eval_formula(f.left, binding, ctx)
        if left is TRUE:
            return TRUE
        return kleene_or(left, eval_formula(f.right, binding, ctx))
    if isinstance(f, Not):
        return kleene_not(eval_formula(f.arg, binding, ctx))
    if isinstance(f, IsNull):
        return eval_is_null(eval_expression(f.expr, binding))
    if isinstance(f, NotIn):
        members, has_null = ctx.subquery(f.subquery)
        return _not_in(eval_expression(f.expr, binding), members, has_null, mode)
    if isinstance(f, Missing):
        raise EvaluationError("MISSING is a Columnar-Semantics construct; expand or compile the query first")
    raise TypeError(f"not a formula: {f!r}")


# -- output schema ------------------------------------------------------------


def output_names(q: Query) -> list:
    """Column names of a query's result, deduplicated with ``_2``, ``_3``..."""
    names, used = [], set()
    for pos, item in enumerate(q.items(), 1):
        expr = item.expr
        if item.alias:
            name = item.alias
        elif isinstance(expr, ColumnRef):
            name = expr.attr
        elif isinstance(expr, Aggregate):
            refs = [] if expr.star else column_refs(expr.arg)
            name = expr.func.lower() + (f"_{refs[0].attr}" if refs else "")
        else:
            name = f"col{pos}"
        base, k = name, 1
        while name in used:
            k += 1
            name = f"{base}_{k}"
        used.add(name)
        names.append(name)
    return names


def output_columns(q: Query, catalog_types) -> tuple:
    """``(name, type)`` pairs; ``catalog_types[table_ref][attr]`` gives types."""

    def column_type(ref):
        return catalog_types[ref.table][ref.attr]

    types = [infer_type(item.expr, column_type) for item in q.items()]
    return tuple(zip(output_names(q), types))


def scope_types(q: Query, db) -> dict:
    """Attribute types keyed by FROM reference name (alias or table name)."""
    return {t.ref: db[t.name].types for t in q.from_}


# -- the engine ---------------------------------------------------------------


def _scan(q: Query, db: Database, mode: EvalMode):
    """Yield bindings (ColumnRef -> value) over the FROM product."""
    tables = []
    for t in q.from_:
        rel = db[t.name]
        refs = [ColumnRef(t.ref, a) for a in rel.attrs]
        rows = [dict(zip(refs, row)) for row in rel.rows]
        if mode is EvalMode.NULL_FREE and any(v is None for row in rel.rows for v in row):
            raise NullInNullFreeMode(f"relation {t.name} contains Null")
        tables.append((t.ref, rows))

    if mode is EvalMode.NULL_FREE:
        yield from _indexed_product(tables, conjuncts(q.where))
        return

    def product(i, acc):
        if i == len(tables):
            yield acc
            return
        for row in tables[i][1]:
            yield from product(i + 1, {**acc, **row})

    yield from product(0, {})


def _indexed_product(tables, where_conjuncts):
    """Nested loops, but tables joined by a ``t.c = u.d`` conjunct use a hash index."""
    equalities = []
    for c in where_conjuncts:
        if isinstance(c, Predicate) and c.op == "=" and isinstance(c.lhs, ColumnRef) and isinstance(c.rhs, ColumnRef):
            if c.lhs.table != c.rhs.table:
                equalities.append((c.lhs, c.rhs))

    remaining = list(range(len(tables)))
    bound = set()
    plan = []  # (table index, probe column in this table, column already bound)
    while remaining:
        choice = None
        for i in remaining:
            ref = tables[i][0]
            for a, b in equalities:
                if a.table == ref and b.table in bound:
                    choice = (i, a, b)
                elif b.table == ref and a.table in bound:
                    choice = (i, b, a)
                if choice:
                    break
            if choice:
                break
        if choice is None:
            choice = (remaining[0], None, None)
        plan.append(choice)
        remaining.remove(choice[0])
        bound.add(tables[choice[0]][0])

    indexes = []
    for i, probe, _ in plan:
        if probe is None:
            indexes.append(None)
            continue
        index = defaultdict(list)
        for row in tables[i][1]:
            index[canonical(row[probe])].append(row)
        indexes.append(index)

    def product(step, acc):
        if step == len(plan):
            yield acc
            return
        i, _, source = plan[step]
        index = indexes[step]
        rows = tables[i][1] if index is None else index.get(canonical(acc[source]), ())
        for row in rows:
            yield from product(step + 1, {**acc, **row})

    yield from product(0, {})


def _describe(binding) -> str:
    return ", ".join(f"{k}={v!r}" for k, v in binding.items())


def run_query(q: Query, db: Database, mode: EvalMode = EvalMode.THREE_VALUED, name: str = "result") -> Relation:
    """Evaluate ``q`` over ``db``: product of FROM, keep bindings whose WHERE
    is exactly TRUE, then project or group and aggregate."""
    q = bind(q, db)
    columns = output_columns(q, scope_types(q, db))
    ctx = _Context(db, mode)

    survivors = []
    for binding in _scan(q, db, mode):
        try:
            if q.where is None or eval_formula(q.where, binding, ctx) is TRUE:
                survivors.append(binding)
        except EvaluationError as exc:
            raise type(exc)(f"{exc} (row: {_describe(binding)})") from exc

    rows = []
    if not q.is_aggregate:
        for binding in survivors:
            try:
                rows.append(tuple(eval_expression(i.expr, binding) for i in q.select_exprs))
            except EvaluationError as exc:
                raise type(exc)(f"{exc} (row: {_describe(binding)})") from exc
        return Relation(name, columns, rows)

    groups = {}
    for binding in survivors:
        key = tuple(canonical(binding[c]) for c in q.group_by)
        groups.setdefault(key, []).append(binding)
    if not q.group_by and not groups:
        groups[()] = []

    for members in groups.values():
        sample = members[0] if members else {}
        row = [eval_expression(i.expr, sample) for i in q.select_exprs]
        for item in q.select_aggs:
            agg = item.expr
            inputs = [True] * len(members) if agg.star else [eval_expression(agg.arg, b) for b in members]
            row.append(eval_aggregate(agg, inputs))
        rows.append(tuple(row))
    return Relation(name, columns, rows)

import random
import sqlite3
from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

import colsem.sql.printer as printer
from colsem.cnf import decompose_db, full_outer_join_group
from colsem.core import FALSE, TRUE, UNKNOWN, Database, Relation
from colsem.errors import NullInNullFreeMode, TypeMismatch
from colsem.evaluate import EvalMode, eval_is_null, eval_predicate, output_names, run_query
from colsem.expand import run_cs
from colsem.harness import (
    GeneratorConfig,
    QueryGenerator,
    check_null_free,
    check_two_valued_simulation,
    gen_instance,
    gen_query,
    trial_seed,
)
from colsem.sql import CS, THREE_VL, bind, parse, print_query
from colsem.sql.ast import And, Query

MODES = list(EvalMode)


def test_predicate_examples():
    assert eval_predicate("=", None, None, EvalMode.THREE_VALUED) is UNKNOWN
    assert eval_predicate("=", None, None, EvalMode.TWO_VALUED) is FALSE
    for mode in MODES:
        assert eval_predicate("<", 1, 2, mode) is TRUE
    with pytest.raises(NullInNullFreeMode):
        eval_predicate("=", 1, None, EvalMode.NULL_FREE)
    with pytest.raises(TypeMismatch):
        eval_predicate("<", 1, "a", EvalMode.THREE_VALUED)


def test_is_null():
    assert eval_is_null(None) is TRUE
    assert eval_is_null(5) is FALSE
    assert eval_is_null("x") is FALSE


def test_example_reflexive_equality(x_db):
    q = parse("SELECT * FROM R WHERE R.x = R.x", catalog=x_db)
    assert run_query(q, x_db, EvalMode.THREE_VALUED).rows == [(1,)]


def test_example_negated_equality(x_db):
    q = parse("SELECT * FROM R WHERE NOT (R.x = R.x)", catalog=x_db)
    assert run_query(q, x_db, EvalMode.TWO_VALUED).rows == [(None,)]
    assert run_query(q, x_db, EvalMode.THREE_VALUED).rows == []
    assert full_outer_join_group(run_cs(q, decompose_db(x_db))).rows == []


def test_null_free_mode_rejects_nulls(x_db):
    with pytest.raises(NullInNullFreeMode):
        run_query(parse("SELECT * FROM R"), x_db, EvalMode.NULL_FREE)


def test_error_names_row():
    db = Database([Relation("R", (("x", "int"), ("s", "str")), [(1, "a")])])
    with pytest.raises(TypeMismatch, match=r"R\.x=1"):
        run_query(parse("SELECT * FROM R WHERE R.x = R.s"), db)


def test_nulls_group_together():
    db = Database([Relation("R", (("k", "int"), ("v", "int")), [(None, 1), (None, 2), (1, 3)])])
    out = run_query(parse("SELECT R.k, COUNT(*) FROM R GROUP BY R.k"), db)
    assert sorted(out.rows, key=repr) == [(1, 1), (None, 2)]


def test_output_names():
    q = parse("SELECT R.x, R.x, COUNT(*), SUM(R.x) AS s, R.x + 1 FROM R GROUP BY R.x")
    assert output_names(q) == ["x", "x_2", "col3", "count", "s"]


def test_not_in_modes():
    db = Database([Relation("A", (("v", "int"),), [(1,), (None,)]), Relation("B", (("v", "int"),), [(1,), (2,)])])
    q = parse("SELECT A.v FROM A WHERE A.v NOT IN (SELECT v FROM B)", THREE_VL)
    assert run_query(q, db, EvalMode.THREE_VALUED).rows == []
    assert run_query(q, db, EvalMode.TWO_VALUED).rows == [(None,)]


# -- sqlite as an independent 3VL oracle --------------------------------------


def _to_sqlite(q: Query, monkeypatch) -> str:
    original = printer.format_value
    monkeypatch.setattr(printer, "format_value", lambda v: "'" + v.replace("'", "''") + "'" if isinstance(v, str) else original(v))
    try:
        return print_query(q)
    finally:
        monkeypatch.setattr(printer, "format_value", original)


def _sqlite_rows(db: Database, sql: str):
    con = sqlite3.connect(":memory:")
    for name, rel in db.items():
        cols = ", ".join(f"{a} {'INTEGER' if t == 'int' else 'TEXT'}" for a, t in rel.columns)
        con.execute(f"CREATE TABLE {name} ({cols})")
        con.executemany(f"INSERT INTO {name} VALUES ({', '.join('?' * len(rel.columns))})", rel.rows)
    return con.execute(sql).fetchall()


def _agrees_with_sqlite(db, q, monkeypatch):
    q = bind(q, db)
    ours = run_query(q, db).bag()
    theirs = Relation("sqlite", run_query(q, db).columns, _sqlite_rows(db, _to_sqlite(q, monkeypatch))).bag()
    return ours == theirs


def test_sqlite_three_valued_queries(monkeypatch):
    base = GeneratorConfig(seed=77)
    checked = 0
    for i in range(300):
        cfg = replace(base, seed=trial_seed(base.seed, i))
        db = gen_instance(cfg)
        q = gen_query(cfg, db, THREE_VL)
        if q.is_aggregate:
            continue  # sqlite aggregates skip Nulls
        assert _agrees_with_sqlite(db, q, monkeypatch), print_query(q)
        checked += 1
    assert checked > 150


def test_sqlite_aggregates_on_null_free_data(monkeypatch):
    base = GeneratorConfig(seed=78, null_probability=0.0)
    checked = 0
    for i in range(300):
        cfg = replace(base, seed=trial_seed(base.seed, i))
        db = gen_instance(cfg)
        q = gen_query(cfg, db, None)
        if not q.is_aggregate:
            continue
        assert _agrees_with_sqlite(db, q, monkeypatch), print_query(q)
        checked += 1
    assert checked > 50


# -- properties ---------------------------------------------------------------

seeds = st.integers(0, 2**64 - 1)


@given(seeds)
def test_null_free_agreement(seed):
    cfg = GeneratorConfig(seed=seed, null_probability=0.0)
    db = gen_instance(cfg)
    assert check_null_free(db, gen_query(cfg, db, None), seed) is None


@given(seeds)
def test_two_valued_simulation(seed):
    cfg = GeneratorConfig(seed=seed)
    db = gen_instance(cfg)
    assert check_two_valued_simulation(db, gen_query(cfg, db, CS), seed) is None


@given(seeds, seeds)
def test_filter_monotonicity(seed, other):
    cfg = GeneratorConfig(seed=seed)
    db = gen_instance(cfg)
    q = gen_query(cfg, db, THREE_VL)
    if q.is_aggregate:
        return
    gen = QueryGenerator(cfg, db, THREE_VL, random.Random(other))
    gen.from_ = q.from_
    psi = gen.formula(3)
    stronger = Query(q.select_exprs, (), q.from_, psi if q.where is None else And(q.where, psi))
    base, narrowed = run_query(q, db).bag(), run_query(stronger, db).bag()
    assert not narrowed - base

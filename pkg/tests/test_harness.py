import json
from dataclasses import replace

import pytest

import colsem.harness as harness
from colsem.cnf import decompose_db, full_outer_join_group
from colsem.evaluate import run_query
from colsem.expand import _with_where, is_null_to_missing, run_cs, simulate_2vl_negation
from colsem.harness import (
    GeneratorConfig,
    check_linear_size,
    check_3vl_to_cs,
    check_cs_to_3vl,
    gen_corpus,
    gen_instance,
    gen_query,
    node_kinds,
    run_checks,
    run_trial,
    trial_seed,
)
from colsem.sql import CS, THREE_VL, parse
from colsem.sql.ast import Predicate, walk


def test_config_validation():
    with pytest.raises(ValueError):
        GeneratorConfig(max_rows=0)
    with pytest.raises(ValueError):
        GeneratorConfig(null_probability=1.5)


def test_instance_determinism():
    cfg = GeneratorConfig(seed=1)
    a, b = gen_instance(cfg), gen_instance(cfg)
    assert {n: r.rows for n, r in a.items()} == {n: r.rows for n, r in b.items()}
    assert gen_query(cfg, a) == gen_query(cfg, b)


def test_null_probability_zero():
    for i in range(50):
        db = gen_instance(GeneratorConfig(seed=i, null_probability=0.0))
        assert all(v is not None for r in db.values() for row in r.rows for v in row)


def test_bounds_respected():
    cfg = GeneratorConfig(max_tables=2, max_columns=2, max_rows=3)
    for i in range(50):
        db = gen_instance(replace(cfg, seed=i))
        assert len(db) <= 2
        assert all(len(r.columns) <= 2 and len(r.rows) <= 3 for r in db.values())


def test_trial_seed_formula():
    assert trial_seed(0, 5) == 5
    assert trial_seed(1, 0) == 0x9E3779B97F4A7C15
    assert trial_seed(2, 0) == (2 * 0x9E3779B97F4A7C15) % 2**64


def test_node_kind_coverage():
    kinds = {}
    for dialect in (CS, THREE_VL):
        corpus = gen_corpus(GeneratorConfig(seed=3), 1000, dialect)
        kinds[dialect] = node_kinds(q for _, q in corpus)
    shared = ["Query", "SelectItem", "TableRef", "ColumnRef", "Constant", "FunctionApp",
              "Aggregate", "Star", "Predicate", "And", "Or", "Not"]
    for dialect, counts in kinds.items():
        for kind in shared:
            assert counts[kind] >= 20, (dialect, kind, counts[kind])
    assert kinds[CS]["Missing"] >= 20
    assert kinds[THREE_VL]["IsNull"] >= 20


def test_corpus_features():
    corpus = gen_corpus(GeneratorConfig(seed=4), 300, CS)
    queries = [q for _, q in corpus]
    assert any(len(q.from_) >= 2 for q in queries)
    assert any(any(t.alias for t in q.from_) for q in queries)
    assert any(q.group_by for q in queries)
    ops = {n.op for q in queries for n in walk(q) if isinstance(n, Predicate)}
    assert ops == {"=", "<>", "<", "<=", ">", ">="}


def test_3vl_to_cs_codd(authors_db):
    q = parse('SELECT Address FROM R WHERE R.Author = "Codd"', THREE_VL, authors_db)
    assert check_3vl_to_cs(authors_db, q) is None


def test_3vl_to_cs_null_free_identity():
    # on null-free data the CS query can be the 3VL query itself
    for i in range(100):
        cfg = GeneratorConfig(seed=i, null_probability=0.0)
        db = gen_instance(cfg)
        q = gen_query(cfg, db, None)
        assert check_3vl_to_cs(db, q, i) is None
        same = full_outer_join_group(run_cs(q, decompose_db(db)))
        assert same.bag() == run_query(q, db).bag()


def test_cs_to_3vl_codd_and_star(authors_db):
    ndb = decompose_db(authors_db)
    assert check_cs_to_3vl(ndb, parse('SELECT Address FROM R WHERE R.Author = "Codd"', catalog=authors_db)) is None
    assert check_cs_to_3vl(ndb, parse("SELECT * FROM R", catalog=authors_db)) is None


def test_linear_size_report(authors_db):
    corpus = [(db, q) for db, q in gen_corpus(GeneratorConfig(seed=5), 200, CS)]
    report = check_linear_size(corpus)
    assert report.ok
    assert report.queries == 400
    assert 1.0 <= report.max_ratio <= 4.0


def test_run_checks_deterministic_and_parallel():
    a = run_checks("52", 30, 9)
    b = run_checks("52", 30, 9, workers=2)
    assert a.text() == b.text()
    assert a.ok


def _broken_cs_from_3vl(q):
    # forgets to guard negated predicates before simulating two-valued logic
    return _with_where(q, simulate_2vl_negation(is_null_to_missing(q.where)))


def test_counterexample_replays(monkeypatch, tmp_path):
    monkeypatch.setattr(harness, "cs_from_3vl", _broken_cs_from_3vl)
    report = run_checks("51", 200, 1)
    assert report.counterexamples
    cx = report.counterexamples[0]
    again = cx.replay()
    assert again is not None
    assert (again.query, again.first_difference) == (cx.query, cx.first_difference)
    cx.write(tmp_path / "cx")
    manifest = json.loads((tmp_path / "cx" / "manifest.json").read_text())
    assert manifest["seed"] == cx.seed and manifest["prop"] == "51"
    assert (tmp_path / "cx" / "query.sql").read_text().strip() == cx.query
    assert (tmp_path / "cx" / "data" / "catalog.txt").exists()


def test_unknown_property():
    with pytest.raises(ValueError):
        run_trial("99", GeneratorConfig())

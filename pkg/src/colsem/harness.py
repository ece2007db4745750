"""Randomized differential testing of the CS pipeline against 3VL.

Every trial derives its own seed from the run seed and the trial index, so
any failure can be regenerated from the seed stored in its CounterExample.
"""

from __future__ import annotations

import json
import random
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

from colsem.cnf import decompose_db, full_outer_join_group, groups_equivalent, normalize_output, recompose_db
from colsem.core import Database, Relation, canonical_row
from colsem.csvio import emit_database, format_value
from colsem.errors import ColsemError
from colsem.evaluate import EvalMode, run_query
from colsem.expand import compile_to_3vl, cs_from_3vl, missing_to_is_null, run_cs
from colsem.sql.ast import (
    COMPARISON_OPS,
    Aggregate,
    And,
    ColumnRef,
    Constant,
    FunctionApp,
    IsNull,
    Missing,
    Not,
    Or,
    Predicate,
    Query,
    SelectItem,
    Star,
    TableRef,
    node_count,
    walk,
)
from colsem.sql.binder import bind
from colsem.sql.parser import CS, THREE_VL
from colsem.sql.printer import print_query

INTS = (0, 1, 2, 3, 4)
STRINGS = ("Codd", "IBM", "San Jose")
TABLE_NAMES = ("R", "S", "T")
ATTR_NAMES = ("a", "b", "c", "d", "e", "f")
_GOLDEN = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class GeneratorConfig:
    max_tables: int = 3
    max_columns: int = 4
    max_rows: int = 8
    null_probability: float = 0.3
    max_formula_depth: int = 4
    seed: int = 0
    int_domain: tuple = INTS
    str_domain: tuple = STRINGS

    def __post_init__(self):
        for name in ("max_tables", "max_columns", "max_rows", "max_formula_depth"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if not 0 <= self.null_probability <= 1:
            raise ValueError("null_probability must lie in [0, 1]")
        if self.max_columns > len(ATTR_NAMES) or self.max_tables > len(TABLE_NAMES):
            raise ValueError("configuration exceeds the generator's name pools")


def trial_seed(seed: int, index: int) -> int:
    return (seed * _GOLDEN + index) & _MASK


def _rng(cfg: GeneratorConfig, purpose: str) -> random.Random:
    return random.Random(f"{cfg.seed}:{purpose}")


# -- instances ----------------------------------------------------------------


def gen_instance(cfg: GeneratorConfig, rng: Optional[random.Random] = None) -> Database:
    rng = rng or _rng(cfg, "instance")
    db = Database()
    for name in TABLE_NAMES[: rng.randint(1, cfg.max_tables)]:
        width = rng.randint(1, cfg.max_columns)
        columns = tuple((a, rng.choice(("int", "str"))) for a in ATTR_NAMES[:width])
        rows = []
        for _ in range(rng.randint(0, cfg.max_rows)):
            row = []
            for _, typ in columns:
                if rng.random() < cfg.null_probability:
                    row.append(None)
                else:
                    row.append(rng.choice(cfg.int_domain if typ == "int" else cfg.str_domain))
            rows.append(tuple(row))
        db.add(Relation(name, columns, rows))
    return db


# -- queries ------------------------------------------------------------------


class QueryGenerator:
    """Well-typed random queries over a given database."""

    def __init__(self, cfg: GeneratorConfig, db: Database, dialect: str, rng: random.Random):
        self.cfg = cfg
        self.db = db
        self.dialect = dialect
        self.rng = rng

    def tables(self) -> tuple:
        rng = self.rng
        names = list(self.db)
        picks = [rng.choice(names) for _ in range(rng.randint(1, min(3, self.cfg.max_tables)))]
        counts = Counter(picks)
        seen = Counter()
        out = []
        for name in picks:
            seen[name] += 1
            alias = f"{name.lower()}{seen[name]}" if counts[name] > 1 else None
            out.append(TableRef(name, alias))
        return tuple(out)

    def columns(self, typ=None) -> list:
        out = []
        for t in self.from_:
            for attr, at in self.db[t.name].columns:
                if typ is None or at == typ:
                    out.append((ColumnRef(t.ref, attr), at))
        return out

    def constant(self, typ):
        domain = self.cfg.int_domain if typ == "int" else self.cfg.str_domain
        return Constant(self.rng.choice(domain))

    def expr(self, typ, depth=2):
        rng = self.rng
        cols = [c for c, _ in self.columns(typ)]
        roll = rng.random()
        if depth > 0 and roll < 0.25:
            op = rng.choice(("+", "-", "*")) if typ == "int" else "||"
            return FunctionApp(op, (self.expr(typ, depth - 1), self.expr(typ, depth - 1)))
        if cols and roll < 0.8:
            return rng.choice(cols)
        return self.constant(typ)

    def column_type(self):
        types = sorted({t for _, t in self.columns()})
        return self.rng.choice(types)

    def atom(self):
        rng = self.rng
        if self.dialect is not None and rng.random() < 0.25:
            ref, _ = rng.choice(self.columns())
            if self.dialect == CS:
                return Missing(ref.table, ref.attr)
            return IsNull(ref if rng.random() < 0.7 else self.expr(self.column_type(), 1))
        typ = self.column_type()
        lhs = rng.choice([c for c, _ in self.columns(typ)]) if rng.random() < 0.7 else self.expr(typ)
        return Predicate(rng.choice(COMPARISON_OPS), lhs, self.expr(typ))

    def formula(self, depth):
        rng = self.rng
        if depth <= 1 or rng.random() < 0.3:
            return self.atom()
        kind = rng.choice(("and", "and", "or", "or", "not"))
        if kind == "not":
            return Not(self.formula(depth - 1))
        node = And if kind == "and" else Or
        return node(self.formula(depth - 1), self.formula(depth - 1))

    def aggregate(self):
        rng = self.rng
        func = rng.choice(("COUNT", "COUNT", "SUM", "MIN", "MAX", "AVG"))
        if func == "COUNT" and rng.random() < 0.5:
            return Aggregate("COUNT")
        if func in ("SUM", "AVG"):
            if not self.columns("int"):
                return Aggregate("COUNT")
            return Aggregate(func, self.expr("int", 1))
        return Aggregate(func, self.expr(self.column_type(), 1))

    def query(self) -> Query:
        rng = self.rng
        self.from_ = self.tables()
        where = self.formula(rng.randint(1, self.cfg.max_formula_depth)) if rng.random() < 0.85 else None
        if rng.random() < 0.35:
            cols = [c for c, _ in self.columns()]
            group_by = tuple(dict.fromkeys(rng.sample(cols, rng.randint(0, min(2, len(cols))))))
            exprs = tuple(SelectItem(c) for c in group_by if rng.random() < 0.7)
            aggs = tuple(SelectItem(self.aggregate()) for _ in range(rng.randint(1, 3)))
            return Query(exprs, aggs, self.from_, where, group_by)
        if rng.random() < 0.15:
            return Query((SelectItem(Star()),), (), self.from_, where)
        items = []
        for _ in range(rng.randint(1, 3)):
            typ = self.column_type()
            items.append(SelectItem(self.expr(typ)))
        return Query(tuple(items), (), self.from_, where)


def gen_query(cfg: GeneratorConfig, db: Database, dialect: str = CS, rng: Optional[random.Random] = None) -> Query:
    """A random query over ``db``; unbound, so ``SELECT *`` stays a Star.

    ``dialect=None`` produces queries without IS NULL and MISSING, which
    every evaluator accepts.
    """
    rng = rng or _rng(cfg, f"query:{dialect}")
    return QueryGenerator(cfg, db, dialect, rng).query()


def gen_corpus(cfg: GeneratorConfig, n: int, dialect: str = CS) -> list:
    """``n`` (db, query) pairs, trial ``i`` seeded from ``trial_seed(cfg.seed, i)``."""
    out = []
    for i in range(n):
        c = replace(cfg, seed=trial_seed(cfg.seed, i))
        db = gen_instance(c)
        out.append((db, gen_query(c, db, dialect)))
    return out


def node_kinds(queries) -> Counter:
    return Counter(type(n).__name__ for q in queries for n in walk(q))


# -- counterexamples ----------------------------------------------------------


def _rows(rel: Relation) -> list:
    return sorted((list(r) for r in rel.rows), key=lambda r: repr(canonical_row(r)))


def _first_difference(left: Relation, right: Relation):
    a, b = left.bag(), right.bag()
    extra = a - b
    if extra:
        return ["only in " + left.name, list(next(iter(extra)))]
    missing = b - a
    if missing:
        return ["only in " + right.name, list(next(iter(missing)))]
    return None


@dataclass
class CounterExample:
    prop: str
    seed: int
    db: Database
    query: str
    outputs: dict = field(default_factory=dict)
    first_difference: Optional[list] = None
    error: Optional[str] = None
    config: Optional[dict] = None

    def replay(self) -> Optional["CounterExample"]:
        """Regenerate the trial from its seed and run the same check again."""
        cfg = GeneratorConfig(**{**(self.config or {}), "seed": self.seed})
        return run_trial(self.prop, cfg)

    def manifest(self) -> dict:
        return {
            "prop": self.prop,
            "seed": self.seed,
            "query": self.query,
            "first_difference": self.first_difference,
            "error": self.error,
            "config": self.config,
            "outputs": self.outputs,
        }

    def write(self, out_dir):
        out_dir = Path(out_dir)
        emit_database(self.db, out_dir / "data")
        (out_dir / "query.sql").write_text(self.query + "\n", encoding="utf-8")
        (out_dir / "manifest.json").write_text(json.dumps(self.manifest(), indent=2, default=str) + "\n", encoding="utf-8")


def _outputs(**relations) -> dict:
    return {k: [[format_value(v) if v is not None else None for v in r] for r in _rows(rel)] for k, rel in relations.items()}


# -- the checks ---------------------------------------------------------------


def check_3vl_to_cs(db: Database, q_3vl: Query, seed: int = 0) -> Optional[CounterExample]:
    """3VL result of ``q_3vl`` versus the recomposed CS result of the derived CS query."""
    text = print_query(q_3vl)
    try:
        expected = run_query(q_3vl, db, EvalMode.THREE_VALUED, name="three_valued")
        q_cs = cs_from_3vl(bind(q_3vl, db))
        got = full_outer_join_group(run_cs(q_cs, decompose_db(db)))
        got.name = "columnar"
    except ColsemError as exc:
        return CounterExample("51", seed, db, text, error=f"{type(exc).__name__}: {exc}")
    if expected.bag() == got.bag():
        return None
    return CounterExample(
        "51", seed, db, text,
        outputs={**_outputs(three_valued=expected, columnar=got), "q_cs": print_query(q_cs)},
        first_difference=_first_difference(got, expected),
    )


def check_cs_to_3vl(ndb, q_cs: Query, seed: int = 0, simulate_2vl: bool = False) -> Optional[CounterExample]:
    """Direct CS evaluation versus compile, run under 3VL on the recomposed data, normalize."""
    text = print_query(q_cs)
    db = recompose_db(ndb)
    try:
        direct = run_cs(q_cs, ndb, simulate_2vl)
        compiled = compile_to_3vl(q_cs, ndb, simulate_2vl)
        via_3vl = normalize_output(run_query(compiled, db, EvalMode.THREE_VALUED))
    except ColsemError as exc:
        return CounterExample("52", seed, db, text, error=f"{type(exc).__name__}: {exc}")
    if groups_equivalent(direct, via_3vl):
        return None
    left, right = full_outer_join_group(direct), full_outer_join_group(via_3vl)
    left.name, right.name = "columnar", "compiled"
    return CounterExample(
        "52", seed, db, text,
        outputs={**_outputs(columnar=left, compiled=right), "compiled_sql": print_query(compiled)},
        first_difference=_first_difference(left, right),
    )


def check_two_valued_simulation(db: Database, q_cs: Query, seed: int = 0) -> Optional[CounterExample]:
    """CS with the negation rewrite against two-valued evaluation of the same text."""
    text = print_query(q_cs)
    try:
        got = full_outer_join_group(run_cs(q_cs, decompose_db(db), simulate_2vl=True))
        got.name = "columnar"
        as_3vl = Query(q_cs.select_exprs, q_cs.select_aggs, q_cs.from_, missing_to_is_null(q_cs.where), q_cs.group_by)
        expected = run_query(as_3vl, db, EvalMode.TWO_VALUED, name="two_valued")
    except ColsemError as exc:
        return CounterExample("2vl", seed, db, text, error=f"{type(exc).__name__}: {exc}")
    if expected.bag() == got.bag():
        return None
    return CounterExample(
        "2vl", seed, db, text,
        outputs=_outputs(two_valued=expected, columnar=got),
        first_difference=_first_difference(got, expected),
    )


def size_ratio(q: Query, catalog, simulate_2vl: bool = False) -> tuple:
    """``(source nodes, compiled nodes)``; the source is measured after ``*`` expansion."""
    bound = bind(q, catalog)
    return node_count(bound), node_count(compile_to_3vl(bound, catalog, simulate_2vl))


def size_bound(n: int) -> int:
    return 4 * n + 8


@dataclass
class SizeReport:
    queries: int = 0
    violations: list = field(default_factory=list)
    max_ratio: float = 0.0
    max_ratio_query: Optional[str] = None

    def add(self, q: Query, source: int, compiled: int):
        self.queries += 1
        ratio = compiled / source
        if ratio > self.max_ratio:
            self.max_ratio, self.max_ratio_query = ratio, print_query(q)
        if compiled > size_bound(source):
            self.violations.append((print_query(q), source, compiled))

    @property
    def ok(self) -> bool:
        return not self.violations


def check_linear_size(corpus) -> SizeReport:
    """``corpus`` holds (catalog, CS query) pairs; both compile modes are measured."""
    report = SizeReport()
    for catalog, q in corpus:
        for simulate in (False, True):
            source, compiled = size_ratio(q, catalog, simulate)
            report.add(q, source, compiled)
    return report


# -- trial driver -------------------------------------------------------------

PROPS = ("51", "52", "size")


def run_trial(prop: str, cfg: GeneratorConfig) -> Optional[CounterExample]:
    """One trial for ``prop`` with ``cfg.seed`` as the trial seed."""
    db = gen_instance(cfg)
    meta = {k: v for k, v in asdict(cfg).items() if k != "seed"}
    if prop == "51":
        cx = check_3vl_to_cs(db, gen_query(cfg, db, THREE_VL), cfg.seed)
    elif prop == "52":
        q = gen_query(cfg, db, CS)
        ndb = decompose_db(db)
        cx = check_cs_to_3vl(ndb, q, cfg.seed) or check_cs_to_3vl(ndb, q, cfg.seed, simulate_2vl=True)
    elif prop == "2vl":
        cx = check_two_valued_simulation(db, gen_query(cfg, db, CS), cfg.seed)
    elif prop == "nullfree":
        cx = check_null_free(db, gen_query(cfg, db, None), cfg.seed)
    elif prop == "size":
        q = gen_query(cfg, db, CS)
        report = check_linear_size([(db, q)])
        cx = None
        if not report.ok:
            text, source, compiled = report.violations[0]
            cx = CounterExample("size", cfg.seed, db, text, error=f"{compiled} nodes for a {source}-node query")
    else:
        raise ValueError(f"unknown property {prop!r}")
    if cx is not None:
        cx.config = {k: list(v) if isinstance(v, tuple) else v for k, v in meta.items()}
    return cx


def check_null_free(db: Database, q: Query, seed: int = 0) -> Optional[CounterExample]:
    """On null-free data, 3VL, 2VL and CS must agree (``q`` must avoid MISSING)."""
    text = print_query(q)
    try:
        three = run_query(q, db, EvalMode.THREE_VALUED, name="three_valued")
        two = run_query(q, db, EvalMode.TWO_VALUED, name="two_valued")
        cs = full_outer_join_group(run_cs(q, decompose_db(db)))
        cs.name = "columnar"
    except ColsemError as exc:
        return CounterExample("nullfree", seed, db, text, error=f"{type(exc).__name__}: {exc}")
    if three.bag() == two.bag() == cs.bag():
        return None
    return CounterExample(
        "nullfree", seed, db, text,
        outputs=_outputs(three_valued=three, two_valued=two, columnar=cs),
        first_difference=_first_difference(cs, three) or _first_difference(two, three),
    )


def _trial(args):
    prop, cfg = args
    return run_trial(prop, cfg)


@dataclass
class Report:
    prop: str
    trials: int
    seed: int
    counterexamples: list = field(default_factory=list)
    max_ratio: Optional[float] = None

    @property
    def ok(self) -> bool:
        return not self.counterexamples

    def text(self) -> str:
        lines = [f"prop {self.prop}: {self.trials} trials, seed {self.seed}, {len(self.counterexamples)} counterexamples"]
        if self.max_ratio is not None:
            lines.append(f"prop {self.prop}: max size ratio {self.max_ratio:.3f}")
        for cx in self.counterexamples:
            lines.append(f"prop {self.prop}: counterexample seed {cx.seed}: {cx.query}")
        return "\n".join(lines)


def run_checks(prop: str, trials: int, seed: int, cfg: Optional[GeneratorConfig] = None, workers: int = 1) -> Report:
    """Run ``trials`` independent trials; results come back in trial order."""
    cfg = cfg or GeneratorConfig()
    jobs = [(prop, replace(cfg, seed=trial_seed(seed, i))) for i in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_trial, jobs, chunksize=max(1, trials // (workers * 8))))
    else:
        results = [_trial(j) for j in jobs]
    report = Report(prop, trials, seed, [cx for cx in results if cx is not None])
    if prop == "size":
        corpus = [(db, q) for db, q in (_size_pair(c) for _, c in jobs)]
        report.max_ratio = check_linear_size(corpus).max_ratio
    return report


def _size_pair(cfg):
    db = gen_instance(cfg)
    return db, gen_query(cfg, db, CS)

"""Command-line entry point: ``colsem {decompose,expand,compile,run,check}``."""

from __future__ import annotations

import argparse
import io
import sys
from pathlib import Path

from colsem.cnf import decompose_db, full_outer_join_group
from colsem.core import Database
from colsem.csvio import emit_csv, emit_database, load_database, read_catalog, write_csv
from colsem.errors import ColsemError
from colsem.evaluate import EvalMode, run_query
from colsem.expand import compile_to_3vl, expand, run_cs
from colsem.harness import GeneratorConfig, run_checks
from colsem.sql.parser import CS, THREE_VL, parse
from colsem.sql.printer import print_query

EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_COUNTEREXAMPLE = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _query_text(args) -> str:
    if args.query is None or args.query == "-":
        return sys.stdin.read()
    return args.query


def _catalog(args):
    if not args.catalog:
        raise _UsageError("--catalog is required")
    return read_catalog(args.catalog)


def _database(args) -> Database:
    if not args.data:
        raise _UsageError("--data is required")
    catalog_path = args.catalog or Path(args.data) / "catalog.txt"
    return load_database(catalog_path, args.data, args.null_token)


def cmd_decompose(args, out):
    db = _database(args)
    ndb = decompose_db(db)
    if not args.out:
        raise _UsageError("--out is required for decompose")
    emit_database(ndb.relations(), args.out, args.null_token)
    return 0


def cmd_expand(args, out):
    q = parse(_query_text(args), CS, _catalog(args))
    out.write(expand(q, _catalog(args), args.simulate_2vl).to_sql())
    return 0


def cmd_compile(args, out):
    catalog = _catalog(args)
    q = parse(_query_text(args), CS, catalog)
    print(print_query(compile_to_3vl(q, catalog, args.simulate_2vl)), file=out)
    return 0


def cmd_run(args, out):
    db = _database(args)
    text = _query_text(args)
    if args.mode == "cs":
        group = run_cs(parse(text, CS, db), decompose_db(db), args.simulate_2vl)
        joined = full_outer_join_group(group)
        if args.out:
            emit_database(Database(group.relations()), args.out, args.null_token)
            emit_csv(joined, Path(args.out) / f"{joined.name}.csv", args.null_token)
    else:
        mode = EvalMode.THREE_VALUED if args.mode == "3vl" else EvalMode.TWO_VALUED
        joined = run_query(parse(text, THREE_VL, db), db, mode)
        if args.out:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            emit_csv(joined, Path(args.out) / f"{joined.name}.csv", args.null_token)
    buf = io.StringIO()
    write_csv(joined, buf, args.null_token)
    out.write(buf.getvalue())
    return 0


def cmd_check(args, out):
    cfg = GeneratorConfig(null_probability=args.null_probability)
    props = ("51", "52", "size") if args.prop == "all" else (args.prop,)
    status = 0
    for prop in props:
        report = run_checks(prop, args.trials, args.seed, cfg, args.workers)
        print(report.text(), file=out)
        for cx in report.counterexamples:
            status = EXIT_COUNTEREXAMPLE
            if args.out:
                cx.write(Path(args.out) / f"prop{prop}-{cx.seed}")
    return status


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="colsem", description="Columnar-Semantics compiler and reference evaluators.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, data=False, query=True):
        sp.add_argument("--catalog", help="catalog file, one name(attr:type,...) per line")
        if data:
            sp.add_argument("--data", help="directory holding <relation>.csv files")
        sp.add_argument("--null-token", default="", help="CSV field text that stands for Null (default: empty)")
        if query:
            sp.add_argument("query", nargs="?", help="SQL text; '-' or omitted reads stdin")

    sp = sub.add_parser("decompose", help="write Column Normal Form CSVs and catalog")
    common(sp, data=True, query=False)
    sp.add_argument("--out", help="output directory")
    sp.set_defaults(func=cmd_decompose)

    sp = sub.add_parser("expand", help="print the expanded queries of a CS query")
    common(sp)
    sp.add_argument("--simulate-2vl", action="store_true")
    sp.set_defaults(func=cmd_expand)

    sp = sub.add_parser("compile", help="print the equivalent standard (3VL) query")
    common(sp)
    sp.add_argument("--simulate-2vl", action="store_true")
    sp.set_defaults(func=cmd_compile)

    sp = sub.add_parser("run", help="evaluate a query and print the result as CSV")
    common(sp, data=True)
    sp.add_argument("--mode", choices=("3vl", "2vl", "cs"), default="3vl")
    sp.add_argument("--simulate-2vl", action="store_true")
    sp.add_argument("--out", help="also write result CSVs here (cs: key and per-column files too)")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("check", help="randomized equivalence checks")
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--prop", choices=("51", "52", "size", "2vl", "nullfree", "all"), default="all")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--null-probability", type=float, default=0.3)
    sp.add_argument("--out", help="directory for counterexample bundles")
    sp.set_defaults(func=cmd_check)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, out)
    except _UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ColsemError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

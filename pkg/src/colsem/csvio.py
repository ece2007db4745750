"""CSV ingestion/emission and the ``name(attr:type,...)`` catalog format."""

from __future__ import annotations

import csv
import re
from pathlib import Path

from colsem.core import TYPES, Database, Relation
from colsem.errors import ArityMismatch, CatalogError, TypeParseError

_CATALOG_LINE = re.compile(r"^\s*([A-Za-z_]\w*)\s*\((.*)\)\s*$")
_ATTR = re.compile(r"^\s*([A-Za-z_]\w*)\s*:\s*(\w+)\s*$")
_INT = re.compile(r"^[+-]?\d+$")


def parse_catalog(text: str) -> dict:
    """``{relation: ((attr, type), ...)}`` in file order. ``#`` starts a comment."""
    catalog = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _CATALOG_LINE.match(line)
        if not m:
            raise CatalogError(f"catalog line {lineno}: cannot parse {raw!r}")
        name, body = m.groups()
        if name in catalog:
            raise CatalogError(f"catalog line {lineno}: duplicate relation {name!r}")
        columns = []
        for part in body.split(","):
            am = _ATTR.match(part)
            if not am:
                raise CatalogError(f"catalog line {lineno}: bad attribute {part.strip()!r}")
            attr, typ = am.groups()
            if typ not in TYPES:
                raise CatalogError(f"catalog line {lineno}: unknown type {typ!r}")
            columns.append((attr, typ))
        if len({a for a, _ in columns}) != len(columns):
            raise CatalogError(f"catalog line {lineno}: duplicate attribute in {name!r}")
        catalog[name] = tuple(columns)
    return catalog


def format_catalog(catalog: dict) -> str:
    lines = []
    for name, columns in catalog.items():
        lines.append(f"{name}(" + ",".join(f"{a}:{t}" for a, t in columns) + ")")
    return "\n".join(lines) + ("\n" if lines else "")


def read_catalog(path) -> dict:
    return parse_catalog(Path(path).read_text(encoding="utf-8"))


def write_catalog(catalog: dict, path):
    Path(path).write_text(format_catalog(catalog), encoding="utf-8")


def parse_value(text: str, typ: str, null_token: str = "", line=None):
    if text == null_token:
        return None
    try:
        if typ == "int":
            if not _INT.match(text):
                raise ValueError(text)
            return int(text)
        if typ == "float":
            return float(text)
        if typ == "bool":
            lowered = text.lower()
            if lowered not in ("true", "false"):
                raise ValueError(text)
            return lowered == "true"
        return text
    except ValueError:
        raise TypeParseError(f"cannot read {text!r} as {typ}", line) from None


def format_value(value, null_token: str = "") -> str:
    if value is None:
        return null_token
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    text = str(value)
    if "\x00" in text:
        raise ValueError(f"value {value!r} contains a NUL character, which CSV cannot carry")
    if text == null_token:
        raise ValueError(f"value {value!r} is indistinguishable from the null token")
    return text


def load_csv(path, name: str, columns, null_token: str = "") -> Relation:
    """Read an RFC-4180 file with a mandatory header naming ``columns``."""
    columns = tuple(columns)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = [a for a, _ in columns]
        if header is None:
            raise ArityMismatch(f"{path}: missing header row", 1)
        if header != expected:
            raise ArityMismatch(f"{path}: header {header} does not match schema {expected}", 1)
        rows = []
        for fields in reader:
            line = reader.line_num
            if not fields and len(columns) == 1:
                fields = [""]  # a blank line is one empty field
            if len(fields) != len(columns):
                raise ArityMismatch(f"{path}: expected {len(columns)} fields, found {len(fields)}", line)
            rows.append(tuple(parse_value(f, t, null_token, line) for f, (_, t) in zip(fields, columns)))
    return Relation(name, columns, rows)


def emit_csv(r: Relation, path, null_token: str = ""):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        write_csv(r, fh, null_token)


def write_csv(r: Relation, fh, null_token: str = ""):
    # CRLF terminators make the writer quote any field holding \r or \n
    writer = csv.writer(fh, lineterminator="\r\n")
    writer.writerow(r.attrs)
    for row in r.rows:
        writer.writerow([format_value(v, null_token) for v in row])


def load_database(catalog_path, data_dir, null_token: str = "") -> Database:
    catalog = read_catalog(catalog_path)
    data_dir = Path(data_dir)
    return Database(load_csv(data_dir / f"{name}.csv", name, cols, null_token) for name, cols in catalog.items())


def emit_database(db: Database, out_dir, null_token: str = "", catalog_name: str = "catalog.txt"):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, r in db.items():
        emit_csv(r, out_dir / f"{name}.csv", null_token)
    write_catalog(db.catalog(), out_dir / catalog_name)

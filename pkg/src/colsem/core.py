"""Values, Kleene truth values, relations, and scalar/aggregate evaluation.

``None`` is the Null marker. Non-null values are plain Python ``int``,
``float``, ``str`` and ``bool``; the column type names are the strings in
``TYPES``.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from colsem.errors import DivisionByZero, EvaluationError, TypeMismatch
from colsem.sql.ast import Aggregate, ColumnRef, Constant, FunctionApp

TYPES = ("int", "float", "str", "bool")
INT_MIN, INT_MAX = -(2**63), 2**63 - 1


class TruthValue(enum.Enum):
    TRUE = "t"
    FALSE = "f"
    UNKNOWN = "u"

    @classmethod
    def of(cls, b: bool) -> "TruthValue":
        return cls.TRUE if b else cls.FALSE


TRUE, FALSE, UNKNOWN = TruthValue.TRUE, TruthValue.FALSE, TruthValue.UNKNOWN


def kleene_and(a: TruthValue, b: TruthValue) -> TruthValue:
    if a is FALSE or b is FALSE:
        return FALSE
    if a is TRUE and b is TRUE:
        return TRUE
    return UNKNOWN


def kleene_or(a: TruthValue, b: TruthValue) -> TruthValue:
    if a is TRUE or b is TRUE:
        return TRUE
    if a is FALSE and b is FALSE:
        return FALSE
    return UNKNOWN


def kleene_not(a: TruthValue) -> TruthValue:
    if a is UNKNOWN:
        return UNKNOWN
    return FALSE if a is TRUE else TRUE


# -- values -------------------------------------------------------------------


def type_of(value) -> Optional[str]:
    """Column type name of a non-null value; None for Null."""
    if value is None:
        return None
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, int):
        return "int"
    if isinstance(value, float):
        return "float"
    if isinstance(value, str):
        return "str"
    raise TypeError(f"unsupported value {value!r}")


def canonical(value):
    """Hashable key that keeps ``1``, ``1.0`` and ``True`` apart."""
    return (type_of(value), value)


def canonical_row(row) -> tuple:
    return tuple(canonical(v) for v in row)


def _numeric(value) -> bool:
    return type_of(value) in ("int", "float")


def _check_int(n: int) -> int:
    if not INT_MIN <= n <= INT_MAX:
        raise EvaluationError(f"integer overflow: {n}")
    return n


def apply_function(op: str, a, b):
    """One arithmetic or concatenation step with strict null propagation."""
    if a is None or b is None:
        return None
    if op == "||":
        if type_of(a) != "str" or type_of(b) != "str":
            raise TypeMismatch(f"cannot concatenate {a!r} and {b!r}")
        return a + b
    if not (_numeric(a) and _numeric(b)):
        raise TypeMismatch(f"cannot apply {op} to {a!r} and {b!r}")
    if op == "/":
        if b == 0:
            raise DivisionByZero(f"division of {a!r} by zero")
        return a / b
    if op == "+":
        result = a + b
    elif op == "-":
        result = a - b
    elif op == "*":
        result = a * b
    else:
        raise ValueError(f"unknown operator {op!r}")
    return _check_int(result) if isinstance(result, int) else result


def eval_expression(e, binding: Mapping):
    """Evaluate ``e`` with ``binding`` mapping each ColumnRef to a value."""
    if isinstance(e, Constant):
        return e.value
    if isinstance(e, ColumnRef):
        return binding[e]
    if isinstance(e, FunctionApp):
        a, b = (eval_expression(x, binding) for x in e.args)
        return apply_function(e.op, a, b)
    raise TypeError(f"not an expression: {e!r}")


def eval_aggregate(g: Aggregate, inputs: list):
    """Aggregate the per-row argument values of one group.

    Any Null among the inputs makes the result Null; this is deliberately
    stricter than ANSI SQL, which skips Nulls. ``COUNT(*)`` receives one
    placeholder per row and only counts them.
    """
    if g.star:
        return len(inputs)
    if any(v is None for v in inputs):
        return None
    if g.func == "COUNT":
        return len(inputs)
    if not inputs:
        return None
    if g.func in ("SUM", "AVG"):
        if not all(_numeric(v) for v in inputs):
            raise TypeMismatch(f"{g.func} over non-numeric input")
        total = sum(inputs)
        if g.func == "AVG":
            return total / len(inputs)
        return _check_int(total) if isinstance(total, int) else total
    kinds = {type_of(v) for v in inputs}
    if len(kinds) > 1 and not kinds <= {"int", "float"}:
        raise TypeMismatch(f"{g.func} over mixed types {sorted(kinds)}")
    return min(inputs) if g.func == "MIN" else max(inputs)


def compare(op: str, a, b) -> bool:
    """Two-valued comparison of non-null values."""
    ta, tb = type_of(a), type_of(b)
    if ta != tb and not (ta in ("int", "float") and tb in ("int", "float")):
        raise TypeMismatch(f"cannot compare {a!r} with {b!r}")
    if op == "=":
        return a == b
    if op == "<>":
        return a != b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    raise ValueError(f"unknown comparison {op!r}")


# -- static typing ------------------------------------------------------------


def infer_type(e, column_type) -> str:
    """Result type of ``e``; ``column_type(ref)`` gives a ColumnRef's type."""
    if isinstance(e, Constant):
        return type_of(e.value)
    if isinstance(e, ColumnRef):
        return column_type(e)
    if isinstance(e, FunctionApp):
        a, b = (infer_type(x, column_type) for x in e.args)
        if e.op == "||":
            if a != "str" or b != "str":
                raise TypeMismatch(f"|| needs str operands, got {a} and {b}")
            return "str"
        if a not in ("int", "float") or b not in ("int", "float"):
            raise TypeMismatch(f"{e.op} needs numeric operands, got {a} and {b}")
        if e.op == "/" or "float" in (a, b):
            return "float"
        return "int"
    if isinstance(e, Aggregate):
        if e.func == "COUNT":
            return "int"
        arg = infer_type(e.arg, column_type)
        if e.func == "AVG":
            return "float"
        if e.func == "SUM" and arg not in ("int", "float"):
            raise TypeMismatch(f"SUM over {arg}")
        return arg
    raise TypeError(f"not an expression: {e!r}")


# -- relations ----------------------------------------------------------------


@dataclass
class Relation:
    """A named multiset of rows. ``columns`` holds ``(attribute, type)``."""

    name: str
    columns: tuple
    rows: list = field(default_factory=list)

    def __post_init__(self):
        self.columns = tuple((a, t) for a, t in self.columns)
        names = [a for a, _ in self.columns]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate column names in {self.name}: {names}")
        for a, t in self.columns:
            if t not in TYPES:
                raise ValueError(f"unknown type {t!r} for column {a}")
        self.rows = [tuple(r) for r in self.rows]
        for row in self.rows:
            self.check_row(row)

    def check_row(self, row):
        if len(row) != len(self.columns):
            raise ValueError(f"{self.name}: row {row!r} has arity {len(row)}, expected {len(self.columns)}")
        for v, (a, t) in zip(row, self.columns):
            if v is not None and type_of(v) != t:
                raise TypeMismatch(f"{self.name}.{a}: {v!r} is not of type {t}")

    @property
    def attrs(self) -> tuple:
        return tuple(a for a, _ in self.columns)

    @property
    def types(self) -> dict:
        return dict(self.columns)

    def bag(self) -> Counter:
        """Rows as a multiset, with type-aware keys."""
        return Counter(canonical_row(r) for r in self.rows)

    def same_rows(self, other: "Relation") -> bool:
        return self.bag() == other.bag()

    def __len__(self):
        return len(self.rows)


class Database(dict):
    """Relation name to Relation."""

    def __init__(self, relations: Iterable[Relation] = ()):
        super().__init__()
        for r in relations:
            self.add(r)

    def add(self, r: Relation):
        if r.name in self:
            raise ValueError(f"duplicate relation name {r.name!r}")
        self[r.name] = r

    def catalog(self) -> dict:
        return {name: r.columns for name, r in self.items()}

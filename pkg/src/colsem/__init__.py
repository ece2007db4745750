"""Columnar Semantics for SQL: Column Normal Form, query expansion and
compilation, plus reference evaluators for checking them."""

from colsem.cnf import (
    NormalizedDatabase,
    NormalizedGroup,
    decompose,
    decompose_db,
    full_outer_join_group,
    groups_equivalent,
    normalize_output,
    recompose_db,
)
from colsem.core import Database, Relation, TruthValue, kleene_and, kleene_not, kleene_or
from colsem.evaluate import EvalMode, run_query
from colsem.expand import compile_to_3vl, expand, run_cs, simulate_2vl_negation
from colsem.sql import CS, THREE_VL, parse, print_query

__all__ = [
    "CS",
    "THREE_VL",
    "Database",
    "EvalMode",
    "NormalizedDatabase",
    "NormalizedGroup",
    "Relation",
    "TruthValue",
    "compile_to_3vl",
    "decompose",
    "decompose_db",
    "expand",
    "full_outer_join_group",
    "groups_equivalent",
    "kleene_and",
    "kleene_not",
    "kleene_or",
    "normalize_output",
    "parse",
    "print_query",
    "recompose_db",
    "run_cs",
    "run_query",
    "simulate_2vl_negation",
]

"""AST to SQL text, and a line-oriented debug dump."""

from __future__ import annotations

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
    Subquery,
    TableRef,
)

_EXPR_PREC = {"+": 1, "-": 1, "||": 1, "*": 2, "/": 2}
_OR, _AND, _NOT, _ATOM = 1, 2, 3, 4


def format_value(value) -> str:
    if isinstance(value, bool):
        return "TRUE" if value else "FALSE"
    if isinstance(value, str):
        return '"' + value.replace('"', '""') + '"'
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _expr_prec(node) -> int:
    return _EXPR_PREC[node.op] if isinstance(node, FunctionApp) else 3


def print_expr(node) -> str:
    if isinstance(node, Constant):
        return format_value(node.value)
    if isinstance(node, ColumnRef):
        return str(node)
    if isinstance(node, FunctionApp):
        prec = _EXPR_PREC[node.op]
        left, right = node.args
        lhs = print_expr(left)
        rhs = print_expr(right)
        if _expr_prec(left) < prec:
            lhs = f"({lhs})"
        if _expr_prec(right) <= prec:
            rhs = f"({rhs})"
        return f"{lhs} {node.op} {rhs}"
    if isinstance(node, Aggregate):
        return f"{node.func}(*)" if node.star else f"{node.func}({print_expr(node.arg)})"
    if isinstance(node, Star):
        return "*"
    raise TypeError(f"not an expression: {node!r}")


def _formula_prec(node) -> int:
    if isinstance(node, Or):
        return _OR
    if isinstance(node, And):
        return _AND
    if isinstance(node, Not):
        return _NOT
    return _ATOM


def print_formula(node) -> str:
    if isinstance(node, Predicate):
        return f"{print_expr(node.lhs)} {node.op} {print_expr(node.rhs)}"
    if isinstance(node, IsNull):
        return f"{print_expr(node.expr)} IS NULL"
    if isinstance(node, Missing):
        return f"{node.table} MISSING {node.attr}"
    if isinstance(node, NotIn):
        sub = node.subquery
        return f"{print_expr(node.expr)} NOT IN (SELECT {sub.column} FROM {sub.table})"
    if isinstance(node, Not):
        return f"NOT ({print_formula(node.arg)})"
    if isinstance(node, (And, Or)):
        prec = _formula_prec(node)
        word = "AND" if prec == _AND else "OR"
        lhs = print_formula(node.left)
        rhs = print_formula(node.right)
        if _formula_prec(node.left) < prec:
            lhs = f"({lhs})"
        if _formula_prec(node.right) <= prec:
            rhs = f"({rhs})"
        return f"{lhs} {word} {rhs}"
    raise TypeError(f"not a formula: {node!r}")


def _print_item(item: SelectItem) -> str:
    text = print_expr(item.expr)
    return f"{text} AS {item.alias}" if item.alias else text


def _print_table(t: TableRef) -> str:
    return f"{t.name} AS {t.alias}" if t.alias else t.name


def print_query(q: Query) -> str:
    parts = ["SELECT " + ", ".join(_print_item(i) for i in q.items())]
    if q.from_:
        parts.append("FROM " + ", ".join(_print_table(t) for t in q.from_))
    if q.where is not None:
        parts.append("WHERE " + print_formula(q.where))
    if q.group_by:
        parts.append("GROUP BY " + ", ".join(str(c) for c in q.group_by))
    return " ".join(parts)


def dump(node, indent: int = 0) -> str:
    """S-expression dump, one node per line with two-space indentation."""
    pad = "  " * indent
    if isinstance(node, Constant):
        return f"{pad}(Constant {format_value(node.value)})"
    if isinstance(node, ColumnRef):
        return f"{pad}(ColumnRef {node.table or '-'} {node.attr})"
    if isinstance(node, Star):
        return f"{pad}(Star)"
    if isinstance(node, TableRef):
        return f"{pad}(TableRef {node.name}" + (f" {node.alias})" if node.alias else ")")
    if isinstance(node, Missing):
        return f"{pad}(Missing {node.table} {node.attr})"
    if isinstance(node, Subquery):
        return f"{pad}(Subquery {node.column} {node.table})"

    if isinstance(node, Query):
        head = "Query"
        sections = [
            ("select-exprs", node.select_exprs),
            ("select-aggs", node.select_aggs),
            ("from", node.from_),
            ("where", () if node.where is None else (node.where,)),
            ("group-by", node.group_by),
        ]
        lines = [f"{pad}({head}"]
        for name, items in sections:
            if not items:
                continue
            lines.append(f"{pad}  ({name}")
            lines.extend(dump(i, indent + 2) for i in items)
            lines[-1] += ")"
        lines[-1] += ")"
        return "\n".join(lines)

    if isinstance(node, SelectItem):
        head, kids = ("SelectItem" + (f" :as {node.alias}" if node.alias else "")), (node.expr,)
    elif isinstance(node, FunctionApp):
        head, kids = f"FunctionApp {node.op}", node.args
    elif isinstance(node, Aggregate):
        head, kids = f"Aggregate {node.func}" + (" *" if node.star else ""), (() if node.star else (node.arg,))
    elif isinstance(node, Predicate):
        head, kids = f"Predicate {node.op}", (node.lhs, node.rhs)
    elif isinstance(node, IsNull):
        head, kids = "IsNull", (node.expr,)
    elif isinstance(node, NotIn):
        head, kids = "NotIn", (node.expr, node.subquery)
    elif isinstance(node, (And, Or)):
        head, kids = type(node).__name__, (node.left, node.right)
    elif isinstance(node, Not):
        head, kids = "Not", (node.arg,)
    else:
        raise TypeError(f"cannot dump {node!r}")
    if not kids:
        return f"{pad}({head})"
    lines = [f"{pad}({head}"] + [dump(k, indent + 1) for k in kids]
    lines[-1] += ")"
    return "\n".join(lines)

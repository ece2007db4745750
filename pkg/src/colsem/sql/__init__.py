"""SQL front end: AST, parser, binder, printer."""

from colsem.sql.ast import *  # noqa: F401,F403
from colsem.sql.binder import bind
from colsem.sql.parser import CS, THREE_VL, parse, parse_formula
from colsem.sql.printer import dump, print_expr, print_formula, print_query

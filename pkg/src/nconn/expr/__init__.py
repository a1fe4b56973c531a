"""Symbolic scalar expressions over chart coordinates and parameters."""
from .nodes import (
    Expr, ZERO, ONE, TWO, HALF, MINUS_ONE, as_expr, const, coord, param,
    add, sub, mul, div, power, neg, apply, sin, cos, exp, ln, sqrt, absolute,
    total, inverse_entry, postorder, free_names, depends_on, count_nodes,
)
from .parser import (
    ExpressionError, ParseError, UnknownIdentifierError, parse, to_string,
    format_number, FUNCTIONS,
)
from .calculus import diff, elongated_diff, substitute
from .simplify import simplify, expand, expanded_terms, is_zero, struct_equal
from .evaluate import (
    DomainError, Evaluation, Program, compile_program, evaluate, evaluate_many,
    default_jobs, isclose_rel, DET_FLOOR,
)

__all__ = [
    "Expr", "ZERO", "ONE", "TWO", "HALF", "MINUS_ONE", "as_expr", "const", "coord",
    "param", "add", "sub", "mul", "div", "power", "neg", "apply", "sin", "cos", "exp",
    "ln", "sqrt", "absolute", "total", "inverse_entry", "postorder", "free_names",
    "depends_on", "count_nodes", "ExpressionError", "ParseError",
    "UnknownIdentifierError", "parse", "to_string", "format_number", "FUNCTIONS",
    "diff", "elongated_diff", "substitute", "simplify", "expand", "expanded_terms", "is_zero", "struct_equal",
    "DomainError", "Evaluation", "Program", "compile_program", "evaluate",
    "evaluate_many", "default_jobs", "isclose_rel", "DET_FLOOR",
]

"""Exact computer-algebra substrate: rational functions over QQ in
shift-indexed variables, parsing, and linear algebra over the function field."""

from .elim import EliminationStuck, InconsistentEquations, triangular_solve
from .expr import ONE, ZERO, RationalExpr, Var, const, diff, is_zero, substitute, var, variables_of
from .matrix import (
    ExprMatrix,
    InconsistentSystem,
    LinearSolution,
    generic_rank,
    in_span,
    nullspace,
    row_space_basis,
    rref,
    solve_linear,
)
from .parse import ParseError, parse_expr, print_expr

__all__ = [
    "ONE",
    "ZERO",
    "EliminationStuck",
    "ExprMatrix",
    "InconsistentEquations",
    "InconsistentSystem",
    "LinearSolution",
    "ParseError",
    "RationalExpr",
    "Var",
    "const",
    "diff",
    "generic_rank",
    "in_span",
    "is_zero",
    "nullspace",
    "parse_expr",
    "print_expr",
    "row_space_basis",
    "rref",
    "solve_linear",
    "substitute",
    "triangular_solve",
    "var",
    "variables_of",
]

"""Expression language and problem-file format."""

from .expr import (ALL_VARS, BinOp, Call, Expr, Index, Neg, Num, Var, eval_array,
                   eval_expression, is_zero_literal, parse_expression, to_source, tokenize,
                   variables)
from .problem import (Impulse, LipschitzData, ProblemSpec, load_problem, parse_problem,
                      problem_to_toml)

__all__ = [
    "ALL_VARS", "BinOp", "Call", "Expr", "Index", "Neg", "Num", "Var", "eval_array",
    "eval_expression", "is_zero_literal", "parse_expression", "to_source", "tokenize",
    "variables", "Impulse", "LipschitzData", "ProblemSpec", "load_problem",
    "parse_problem", "problem_to_toml",
]

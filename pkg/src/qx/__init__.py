"""qx: a quotation language with local and distributed execution.

Expressions are plain data (see qx.expr), evaluated deterministically
(qx.evaluator), shipped over TCP to worker pools (qx.wire, qx.cluster),
swept over parameter grids (qx.sweep), compiled to ECMAScript (qx.jsgen),
or rendered as composable HTML forms (qx.forms).
"""

from qx.expr import (
    App,
    Expr,
    If,
    Lam,
    Let,
    LetRec,
    ListLit,
    LitBool,
    LitFloat,
    LitInt,
    LitStr,
    LitUnit,
    ParseError,
    UNIT,
    UnliftableValue,
    Var,
    free_vars,
    lift,
    parse_expr,
    print_expr,
    substitute,
)
from qx.evaluator import EvalError, Evaluator, evaluate

__all__ = [
    "App", "Expr", "If", "Lam", "Let", "LetRec", "ListLit",
    "LitBool", "LitFloat", "LitInt", "LitStr", "LitUnit", "UNIT",
    "ParseError", "UnliftableValue", "Var",
    "free_vars", "lift", "parse_expr", "print_expr", "substitute",
    "EvalError", "Evaluator", "evaluate",
]

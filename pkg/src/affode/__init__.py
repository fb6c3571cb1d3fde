"""Exact Cartan equivalence analysis of y'' = f(x, y, y') under area-preserving point maps."""

from .expr import Expr, QuadExtExpr, Symbol, eval_rational, instantiate_jets, partial
from .forms import CoframeBasis, DiffForm, MatrixForm, exterior_derivative, matrix_curvature, wedge
from .jets import OdeInput, is_linearizable, relative_invariant, total_derivative
from .parser import ParseError, parse_expr

__all__ = [
    "CoframeBasis",
    "DiffForm",
    "Expr",
    "MatrixForm",
    "OdeInput",
    "ParseError",
    "QuadExtExpr",
    "Symbol",
    "eval_rational",
    "exterior_derivative",
    "instantiate_jets",
    "is_linearizable",
    "matrix_curvature",
    "parse_expr",
    "partial",
    "relative_invariant",
    "total_derivative",
    "wedge",
]

__version__ = "0.1.0"

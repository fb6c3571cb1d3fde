"""Independent oracles: sympy expansion and exact finite differences."""

from fractions import Fraction
from itertools import product

import sympy
from hypothesis import strategies as st

from affode.expr import P, X, Y, Expr

sx, sy, sp, sb = sympy.symbols("x y p b")
SYMPY_NAMES = {"x": sx, "y": sy, "p": sp, "b": sb}


def to_sympy(e):
    """Rendered expression (or source text) to sympy, spelling y' as p."""
    text = str(e).replace("y'", "p").replace("^", "**")
    return sympy.sympify(text, locals=SYMPY_NAMES)


def exact_lambda(expr, variables):
    """Callable evaluating ``expr`` on Fractions without any float step."""
    _F = sympy.Function("_F")
    wrapped = expr.xreplace(
        {r: _F(r.p, r.q) for r in expr.atoms(sympy.Rational) if not r.is_integer}
    )
    return sympy.lambdify(variables, wrapped, modules=[{"_F": Fraction}])


def sympy_D(g, f):
    return sympy.diff(g, sx) + sp * sympy.diff(g, sy) + f * sympy.diff(g, sp)


def sympy_I(f):
    fp = sympy.diff(f, sp)
    return sympy.diff(f, sy) + sympy.Rational(2, 9) * fp**2 - sympy.Rational(1, 3) * sympy_D(fp, f)


def sympy_I1(f):
    fp, fpp = sympy.diff(f, sp), sympy.diff(f, sp, 2)
    return (
        -sympy.Rational(1, 3) * sympy.diff(f, sy, sp)
        - sympy.Rational(1, 18) * fp * fpp
        + sympy.Rational(1, 6) * sympy_D(fpp, f)
    )


# central-difference weights by derivative order, offsets -2..2
_WEIGHTS = {
    0: {0: Fraction(1)},
    1: {-1: Fraction(-1, 2), 1: Fraction(1, 2)},
    2: {-1: Fraction(1), 0: Fraction(-2), 1: Fraction(1)},
    3: {-2: Fraction(-1, 2), -1: Fraction(1), 1: Fraction(-1), 2: Fraction(1, 2)},
}

FD_STEP = Fraction(1, 10000)


def fd_partial(fn, point, orders, h=FD_STEP):
    """Mixed partial of ``fn(x, y, p)`` by tensor-product central differences, exactly."""
    total = Fraction(0)
    stencils = [_WEIGHTS[o].items() for o in orders]
    for combo in product(*stencils):
        w = Fraction(1)
        shifted = list(point)
        for axis, (off, weight) in enumerate(combo):
            w *= weight
            shifted[axis] = point[axis] + off * h
        total += w * fn(*shifted)
    return total / h ** sum(orders)


def fd_invariants(fn, point):
    """Relative invariant and I1 built from finite-difference jets of ``fn``."""
    x, y, p = point

    def j(a, b, c):
        return fd_partial(fn, point, (a, b, c))

    f = fn(x, y, p)
    fy, fp, fpp = j(0, 1, 0), j(0, 0, 1), j(0, 0, 2)
    D_fp = j(1, 0, 1) + p * j(0, 1, 1) + f * fpp
    I = fy + Fraction(2, 9) * fp * fp - Fraction(1, 3) * D_fp
    D_fpp = j(1, 0, 2) + p * j(0, 1, 2) + f * j(0, 0, 3)
    I1 = -Fraction(1, 3) * j(0, 1, 1) - Fraction(1, 18) * fp * fpp + Fraction(1, 6) * D_fpp
    return I, I1


def close(a, b, rel=Fraction(1, 10**5)):
    return abs(Fraction(a) - Fraction(b)) <= rel * max(1, abs(Fraction(a)), abs(Fraction(b)))


# -- hypothesis strategies ---------------------------------------------------

VARS = (X, Y, P)


@st.composite
def polynomials(draw, variables=VARS, max_terms=4, max_exp=3, coeff=5):
    n = draw(st.integers(0, max_terms))
    out = Expr(0)
    for _ in range(n):
        c = draw(st.integers(-coeff, coeff))
        term = Expr(c)
        for v in variables:
            term = term * Expr(v) ** draw(st.integers(0, max_exp))
        out = out + term
    return out


@st.composite
def rational_functions(draw, variables=VARS):
    num = draw(polynomials(variables))
    den = draw(polynomials(variables, max_terms=2, max_exp=2).filter(bool))
    return num / den


def small_rationals(lo=-3, hi=3):
    return st.fractions(min_value=lo, max_value=hi, max_denominator=7)

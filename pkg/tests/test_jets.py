import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from affode.corpus import LINEARIZABLE, NOT_LINEARIZABLE
from affode.expr import P, X, Y, Expr, fjet, instantiate_jets
from affode.jets import (
    CubicCoefficients,
    NotCubic,
    OdeInput,
    closed_form_I1,
    closed_form_invariants,
    closure_residuals,
    cubic_decompose,
    is_linearizable,
    relative_invariant,
    total_derivative,
)

from oracles import polynomials, sympy_I, sympy_I1, to_sympy

x, y, p = Expr(X), Expr(Y), Expr(P)


def ode(text):
    return OdeInput.parse(text)


def test_total_derivative_examples():
    formal = OdeInput.formal()
    assert total_derivative(y, formal) == p
    assert total_derivative(p, formal) == fjet()
    assert total_derivative(3 * p**2, ode("y'^3")) == 6 * p**4


@pytest.mark.parametrize(
    "f, expected",
    [("0", "0"), ("y", "1"), ("y'^3", "0"), ("y*y'^3", "0"), ("y'^3 + x", "-2*x*y'")],
)
def test_relative_invariant_examples(f, expected):
    assert relative_invariant(ode(f)) == OdeInput.parse(expected).f


def test_relative_invariant_formal_is_polynomial():
    assert relative_invariant(OdeInput.formal()).is_polynomial()


def test_concrete_input_rejects_bundle_symbols():
    with pytest.raises(ValueError):
        ode("u1 + x")


def test_cubic_decompose_examples():
    c = cubic_decompose(ode("y'^3 + 3*x*y'"))
    assert (c.A, c.B, c.C, c.D) == (Expr(1), Expr(0), x, Expr(0))
    c = cubic_decompose(ode("-3*y'/(2*x)"))
    assert c.C == -1 / (2 * x)
    with pytest.raises(NotCubic):
        cubic_decompose(ode("y'^4"))
    with pytest.raises(NotCubic):
        cubic_decompose(ode("1/y'"))


def test_closure_residual_examples():
    zero = Expr(0)
    assert closure_residuals(CubicCoefficients(zero, zero, zero, zero)).all_zero()
    r = closure_residuals(cubic_decompose(ode("y'^3 + x")))
    assert r.r2 == -x
    assert closure_residuals(cubic_decompose(ode("-3*y'/(2*x)"))).all_zero()


@pytest.mark.parametrize("f", LINEARIZABLE)
def test_linearizable_corpus(f):
    verdict = is_linearizable(ode(f))
    assert verdict.linearizable
    assert verdict.witness is None


@pytest.mark.parametrize("f, witness", sorted(NOT_LINEARIZABLE.items()))
def test_non_linearizable_corpus(f, witness):
    verdict = is_linearizable(ode(f))
    assert not verdict.linearizable
    assert verdict.witness == witness


def test_closed_form_invariants_examples():
    inv = closed_form_invariants(ode("0"))
    assert not inv.I and inv.all_zero()
    formal = OdeInput.formal()
    expected = (
        -fjet(0, 1, 1) / 3
        - fjet(0, 0, 1) * fjet(0, 0, 2) / 18
        + total_derivative(fjet(0, 0, 2), formal) / 6
    )
    assert closed_form_invariants(formal).I1 == expected
    assert closed_form_I1(ode("-3*y'/(2*x)")).is_zero()
    assert closed_form_I1(ode("y'^3 + x")) == x


@st.composite
def cubics(draw):
    coeffs = [draw(polynomials((X, Y), max_terms=3, max_exp=2, coeff=3)) for _ in range(4)]
    A, B, C, D = coeffs
    return A * p**3 + 3 * B * p**2 + 3 * C * p + D


@settings(max_examples=120, deadline=None)
@given(cubics())
def test_cubic_invariant_vanishes_iff_residuals_vanish(f):
    o = OdeInput(f)
    I = relative_invariant(o)
    res = closure_residuals(cubic_decompose(o))
    assert (not I) == res.all_zero()
    # I = r3 p^2 + 2 r2 p + r1, checked against an independent sympy expansion
    assert I == res.r3 * p**2 + 2 * res.r2 * p + res.r1
    oracle = sympy.expand(sympy_I(to_sympy(f)))
    assert sympy.expand(oracle - to_sympy(res.r3 * p**2 + 2 * res.r2 * p + res.r1)) == 0


@settings(max_examples=50, deadline=None)
@given(cubics())
def test_linearizable_implies_flat(f):
    o = OdeInput(f)
    if is_linearizable(o):
        assert not relative_invariant(o)


@settings(max_examples=40, deadline=None)
@given(polynomials(max_terms=3, max_exp=3, coeff=3))
def test_concrete_matches_instantiated_formal(f):
    o = OdeInput(f)
    formal = OdeInput.formal()
    assert closed_form_I1(o) == instantiate_jets(closed_form_I1(formal), f)
    assert relative_invariant(o) == instantiate_jets(relative_invariant(formal), f)


@settings(max_examples=40, deadline=None)
@given(polynomials(max_terms=3, max_exp=3, coeff=3))
def test_invariants_match_sympy(f):
    o = OdeInput(f)
    sf = to_sympy(f)
    assert sympy.expand(to_sympy(relative_invariant(o)) - sympy_I(sf)) == 0
    assert sympy.expand(to_sympy(closed_form_I1(o)) - sympy_I1(sf)) == 0

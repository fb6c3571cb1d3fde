import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from affode.connection import build_connection, maurer_cartan_form
from affode.expr import P, U1, U3, X, Y, Expr, fjet
from affode.forms import (
    BASE3,
    BUNDLE5,
    Chart,
    ChartMismatch,
    CoframeBasis,
    CoframeNotInvertible,
    DiffForm,
    MatrixForm,
    exterior_derivative,
    express_in_coframe,
    matrix_curvature,
    wedge,
)
from affode.jets import OdeInput
from affode.pipeline import Stage, build_stage_coframe

from oracles import polynomials

d = exterior_derivative
dx, dy, dp = (DiffForm.d_coord(BASE3, c) for c in (X, Y, P))
x, y, p = Expr(X), Expr(Y), Expr(P)

BUNDLE_VARS = (X, Y, P, U1, U3)


def test_wedge_examples():
    assert wedge(dx, dx).is_zero()
    assert wedge(dx, dy).terms == {(0, 1): Expr(1)}
    assert wedge(dy.scale(x), dx.scale(y)) == wedge(dx, dy).scale(-x * y)


def test_wedge_chart_mismatch():
    with pytest.raises(ChartMismatch):
        wedge(dx, DiffForm.d_coord(BUNDLE5, U1))


def test_exterior_derivative_examples():
    assert d(dy.scale(x)) == wedge(dx, dy)
    assert d(dx).is_zero()
    f = fjet()
    assert d(dx.scale(f)) == wedge(dy, dx).scale(fjet(0, 1, 0)) + wedge(dp, dx).scale(fjet(0, 0, 1))


def test_jets_have_no_fibre_derivatives():
    form = DiffForm.function(BUNDLE5, fjet(0, 0, 1))
    assert d(form).restrict((U1, U3)).is_zero()


def test_zero_forms_compare_equal_across_degrees():
    assert DiffForm.zero(BASE3, 1) == DiffForm.zero(BASE3, 2)


def test_express_dy_in_contact_coframe():
    w1 = dy - dx.scale(p)
    w2 = dp
    basis = CoframeBasis(BASE3, [w1, w2, dx], ["w1", "w2", "w3"])
    coeffs = express_in_coframe(dy, basis)
    assert {basis.monomial_name(k): v for k, v in coeffs.items()} == {"w1": Expr(1), "w3": p}


def test_express_dx_in_coordinate_coframe():
    basis = CoframeBasis(BASE3, [dx, dy, dp])
    assert express_in_coframe(dx, basis) == {(0,): Expr(1)}


def test_dtheta2_flat_has_no_invariant_term():
    cf = build_stage_coframe(OdeInput.parse("0"), Stage.PROLONGED)
    assert cf.basis.coefficient(d(cf["theta2"]), "theta3", "theta1").is_zero()


def test_singular_coframe_rejected():
    basis = CoframeBasis(BASE3, [dx, dx.scale(x), dp])
    with pytest.raises(CoframeNotInvertible):
        basis.express(dy)


@st.composite
def one_forms(draw, chart=BUNDLE5):
    coeffs = {c: draw(polynomials(BUNDLE_VARS, max_terms=3, max_exp=2)) for c in chart}
    return DiffForm.one_form(chart, coeffs)


@settings(max_examples=100, deadline=None)
@given(polynomials(BUNDLE_VARS), one_forms())
def test_d_squared_vanishes(g, a):
    assert d(d(DiffForm.function(BUNDLE5, g))).is_zero()
    assert d(d(a)).is_zero()


@settings(max_examples=100, deadline=None)
@given(one_forms(), one_forms(), polynomials(BUNDLE_VARS))
def test_leibniz(a, b, g):
    assert d(wedge(a, b)) == wedge(d(a), b) - wedge(a, d(b))
    fg = DiffForm.function(BUNDLE5, g)
    assert d(a.scale(g)) == wedge(d(fg), a) + d(a).scale(g)


@settings(max_examples=30, deadline=None)
@given(one_forms(), one_forms())
def test_reexpression_reconstructs(a, b):
    cf = build_stage_coframe(OdeInput.formal(), Stage.PROLONGED)
    for form in (a, wedge(a, b)):
        assert cf.basis.rebuild(cf.basis.express(form), form.degree) == form


def _asl(entries):
    z = DiffForm.zero(BUNDLE5)
    return MatrixForm([[z, z, z], *entries])


@settings(max_examples=30, deadline=None)
@given(st.lists(one_forms(), min_size=5, max_size=5))
def test_curvature_preserves_asl_shape(fs):
    a, b, c, e, g = fs
    omega = _asl([[a, b, c], [e, g, -b]])
    assert omega.is_asl_shaped()
    assert matrix_curvature(omega).is_asl_shaped()


def test_curvature_examples():
    z = DiffForm.zero(BASE3)
    zero = MatrixForm([[z] * 3 for _ in range(3)])
    assert matrix_curvature(zero).is_zero()
    assert matrix_curvature(maurer_cartan_form()).is_zero()
    assert matrix_curvature(build_connection(OdeInput.parse("0"))).is_zero()


def test_on_chart_and_restrict():
    form = wedge(dp, dx)
    lifted = form.on_chart(BUNDLE5)
    assert lifted.chart == BUNDLE5
    assert lifted == wedge(DiffForm.d_coord(BUNDLE5, P), DiffForm.d_coord(BUNDLE5, X))
    assert Chart((X, Y)) != BASE3

"""Lifted coframes, structure equations and branch classification.

The coframes are written down in closed form for each reduction stage; every
structure equation is then *verified* by exterior differentiation and
re-expression in the coframe rather than derived by a general absorption
algorithm.
"""

from __future__ import annotations

import enum
import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

from .expr import ONE, P, U1, U2, U3, X, Y, ZERO, Expr, QuadExtExpr, Symbol, const_symbol
from .forms import (
    BASE3,
    BUNDLE5,
    BUNDLE6,
    Chart,
    CoframeBasis,
    DiffForm,
    exterior_derivative,
    wedge,
)
from .jets import (
    InvariantSet,
    LinearizabilityVerdict,
    OdeInput,
    closed_form_I1,
    closed_form_I2_section,
    closed_form_I3_section,
    is_linearizable,
    relative_invariant,
)
from .linalg import rank

log = logging.getLogger(__name__)

__all__ = [
    "Stage",
    "StageCoframe",
    "StructureReport",
    "CharacterReport",
    "EStructure3",
    "BranchVerdict",
    "PreconditionViolated",
    "InvariantVanishes",
    "build_stage_coframe",
    "essential_torsion",
    "absorb_initial_torsion",
    "verify_structure_equations",
    "extract_invariants",
    "syzygy_check",
    "cartan_characters",
    "pi_ambiguity_dimension",
    "reduce_nonvanishing_branch",
    "classify",
    "resolve_pi2_variant",
]

THIRD = Fraction(1, 3)
SIXTH = Fraction(1, 6)

PI2_VARIANTS = ("theta3", "theta1")


class PreconditionViolated(ValueError):
    pass


class InvariantVanishes(ValueError):
    pass


class Stage(enum.Enum):
    INITIAL = "initial"
    REDUCED = "reduced"
    PROLONGED = "prolonged"

    @property
    def chart(self) -> Chart:
        return BUNDLE6 if self is Stage.INITIAL else BUNDLE5


@dataclass
class StageCoframe:
    stage: Stage
    ode: OdeInput
    basis: CoframeBasis
    pi2_variant: str

    @property
    def chart(self) -> Chart:
        return self.basis.chart

    def __getitem__(self, name: str) -> DiffForm:
        return self.basis.forms[self.basis.names.index(name)]

    def wedge_of(self, *names: str) -> DiffForm:
        out = self[names[0]]
        for n in names[1:]:
            out = wedge(out, self[n])
        return out


def _d(chart: Chart, c: Symbol) -> DiffForm:
    return DiffForm.d_coord(chart, c)


def _contact_forms(ode: OdeInput, chart: Chart, reduced: bool):
    dx, dy, dp = (_d(chart, c) for c in (X, Y, P))
    p = Expr(P)
    w1 = dy - dx.scale(p)
    w2 = dp - dx.scale(ode.f)
    if reduced:
        w2 = w2 - w1.scale(THIRD * ode.fp)
    return w1, w2, dx


def reference_t1(ode: OdeInput) -> Expr:
    """The value of t1 fixed by the prolonged reduction."""
    u1, u3 = Expr(U1), Expr(U3)
    return (
        -Fraction(2, 3) * u3 * u3 / u1 * ode.fp
        - ode.fppp / (6 * u1 ** 3)
        + Fraction(1, 2) * u3 / (u1 * u1) * ode.fpp
    )


def build_stage_coframe(ode: OdeInput, stage: Stage, pi2_variant: str = "theta3") -> StageCoframe:
    """The lifted coframe of ``stage``.

    ``pi2_variant`` selects the form multiplying the last term of pi2 (and
    Omega2): ``"theta3"`` as stated, or ``"theta1"``.
    """
    if pi2_variant not in PI2_VARIANTS:
        raise ValueError(f"unknown pi2 variant {pi2_variant!r}")
    chart = stage.chart
    u1, u3 = Expr(U1), Expr(U3)
    du1, du3 = _d(chart, U1), _d(chart, U3)
    if stage is Stage.INITIAL:
        u2 = Expr(U2)
        du2 = _d(chart, U2)
        w1, w2, w3 = _contact_forms(ode, chart, reduced=False)
        th1 = w1.scale(u1)
        th2 = w1.scale(u2) + w2.scale(u1 * u1)
        th3 = w1.scale(u3) + w3.scale(u1.inverse())
        pi1 = du1.scale(u1.inverse())
        pi2 = du2.scale(u1.inverse()) - du1.scale(2 * u2 / (u1 * u1))
        pi3 = du3.scale(u1.inverse()) + du1.scale(u3 / (u1 * u1))
        basis = CoframeBasis(chart, [th1, th2, th3, pi1, pi2, pi3],
                             ["theta1", "theta2", "theta3", "pi1", "pi2", "pi3"])
        return StageCoframe(stage, ode, basis, pi2_variant)

    w1, _, w3 = _contact_forms(ode, chart, reduced=False)
    _, w2_initial, _ = _contact_forms(ode, chart, reduced=False)
    # u2 eliminated by the vanishing of the essential torsion
    u2 = -THIRD * u1 * u1 * ode.fp
    th1 = w1.scale(u1)
    th2 = w1.scale(u2) + w2_initial.scale(u1 * u1)
    th3 = w1.scale(u3) + w3.scale(u1.inverse())
    fp, fpp = ode.fp, ode.fpp
    shear = (fpp - 2 * u1 * u3 * fp) / (6 * u1)
    pi1 = du1.scale(u1.inverse()) + th2.scale(u3 / u1) + th3.scale(THIRD * u1 * fp) + th1.scale(shear)
    last = th3 if pi2_variant == "theta3" else th1
    pi2 = (
        du1.scale(u3 / (u1 * u1))
        + du3.scale(u1.inverse())
        + th2.scale((u3 / u1) ** 2)
        + th3.scale(THIRD * u3 * fp)
        - last.scale(shear)
    )
    if stage is Stage.REDUCED:
        basis = CoframeBasis(chart, [th1, th2, th3, pi1, pi2], ["theta1", "theta2", "theta3", "pi1", "pi2"])
    else:
        om2 = pi2 + th1.scale(reference_t1(ode))
        basis = CoframeBasis(chart, [th1, th2, th3, pi1, om2],
                             ["theta1", "theta2", "theta3", "Omega1", "Omega2"])
    return StageCoframe(stage, ode, basis, pi2_variant)


# ---------------------------------------------------------------------------
# Structure equations


@dataclass
class StructureReport:
    stage: Stage
    equations: Dict[str, Dict[str, Expr]]
    torsion: Dict[str, Expr] = field(default_factory=dict)
    checks: Dict[str, bool] = field(default_factory=dict)
    notes: Dict[str, str] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


def _table(cf: StageCoframe, form: DiffForm, check_reconstruction: bool = True) -> Dict[str, Expr]:
    coeffs = cf.basis.express(form)
    if check_reconstruction and cf.basis.rebuild(coeffs, form.degree) != form:
        raise AssertionError("coframe re-expression failed to reconstruct the form")
    return {cf.basis.monomial_name(k): v for k, v in sorted(coeffs.items())}


def _coef(table: Dict[str, Expr], a: str, b: str) -> Expr:
    """Coefficient of ``a ^ b`` from a table keyed by sorted monomial names."""
    if f"{a}^{b}" in table:
        return table[f"{a}^{b}"]
    return -table.get(f"{b}^{a}", ZERO)


@dataclass
class AbsorptionReport:
    before: Dict[str, Dict[str, Expr]]
    after: Dict[str, Dict[str, Expr]]
    shifts: Dict[str, Dict[str, Expr]]
    essential: Expr
    T1_32: Expr


def absorb_initial_torsion(ode: OdeInput) -> AbsorptionReport:
    """Absorb inessential torsion of the initial lifted coframe.

    pi^a is replaced by pi^a + T^a_31 theta3 + T^a_21 theta2 with the T's read
    off the structure equations of theta^a in which pi^a enters through
    ``pi^a ^ theta1``.  What survives in d theta2 is the coefficient of
    theta3 ^ theta2, shifted by twice the theta3^theta1 torsion of d theta1.
    """
    cf = build_stage_coframe(ode, Stage.INITIAL)
    names = ("theta1", "theta2", "theta3")
    before = {n: _table(cf, exterior_derivative(cf[n])) for n in names}
    shifts = {}
    new_forms = dict(zip(cf.basis.names, cf.basis.forms))
    for a, n in zip(("pi1", "pi2", "pi3"), names):
        t31 = _coef(before[n], "theta3", "theta1")
        t21 = _coef(before[n], "theta2", "theta1")
        shifts[a] = {"theta3": t31, "theta2": t21}
        new_forms[a] = cf[a] + cf["theta3"].scale(t31) + cf["theta2"].scale(t21)
    absorbed = StageCoframe(
        Stage.INITIAL,
        ode,
        CoframeBasis(cf.chart, [new_forms[n] for n in cf.basis.names], cf.basis.names),
        cf.pi2_variant,
    )
    after = {n: _table(absorbed, exterior_derivative(cf[n])) for n in names}
    return AbsorptionReport(
        before=before,
        after=after,
        shifts=shifts,
        essential=_coef(after["theta2"], "theta3", "theta2"),
        T1_32=_coef(after["theta1"], "theta3", "theta2"),
    )


def essential_torsion(ode: OdeInput) -> Expr:
    """The torsion of d theta2 surviving absorption: u1 f_p + 3 u2/u1."""
    return absorb_initial_torsion(ode).essential


def _prolonged_reference_dOmega2(cf: StageCoframe, with_I_term: bool) -> DiffForm:
    ode = cf.ode
    u1, u3 = Expr(U1), Expr(U3)
    I2 = -ode.jet(0, 0, 4) / (6 * u1 ** 5)
    I3 = closed_form_I3_section(ode) / (u1 * u1) + 2 * u3 / u1 * closed_form_I1(ode)
    if with_I_term:
        I3 = I3 + u3 * u3 * relative_invariant(ode)
    return (
        cf.wedge_of("Omega2", "Omega1").scale(2)
        + cf.wedge_of("theta2", "theta1").scale(I2)
        + cf.wedge_of("theta3", "theta1").scale(I3)
    )


def verify_structure_equations(
    ode: OdeInput, stage: Stage, pi2_variant: str = "theta3", require_flat: bool = True
) -> StructureReport:
    """Differentiate the stage coframe and check the expected structure equations.

    For the prolonged stage with a concrete right-hand side whose relative
    invariant is nonzero, ``require_flat`` raises :class:`PreconditionViolated`
    since the prolonged equations are only claimed when it vanishes.
    """
    I = relative_invariant(ode)
    if stage is Stage.PROLONGED and require_flat and not ode.is_formal and I:
        raise PreconditionViolated(f"relative invariant is {I}, not identically zero")
    cf = build_stage_coframe(ode, stage, pi2_variant)
    u1, u3 = Expr(U1), Expr(U3)
    report = StructureReport(stage, {})
    if stage is Stage.INITIAL:
        ab = absorb_initial_torsion(ode)
        report.equations = ab.after
        report.torsion = {"T1_32": ab.T1_32, "T2_32_essential": ab.essential}
        u2 = Expr(U2)
        report.checks["T1_32=1"] = ab.T1_32 == ONE
        report.checks["essential=u1*f_p+3*u2/u1"] = ab.essential == u1 * ode.fp + 3 * u2 / u1
        return report

    names = cf.basis.names
    d = {n: exterior_derivative(cf[n]) for n in names}
    report.equations = {n: _table(cf, d[n]) for n in names}
    a, b = names[3], names[4]  # pi1/pi2 or Omega1/Omega2
    theta31 = cf.wedge_of("theta3", "theta1")
    report.torsion["u1^2*I"] = _coef(report.equations["theta2"], "theta3", "theta1")
    report.checks["dtheta1"] = d["theta1"] == cf.wedge_of(a, "theta1") + cf.wedge_of("theta3", "theta2")
    report.checks["dtheta2"] = d["theta2"] == cf.wedge_of(a, "theta2").scale(2) + theta31.scale(u1 * u1 * I)
    report.checks["dtheta3"] = d["theta3"] == cf.wedge_of(b, "theta1") - cf.wedge_of(a, "theta3")
    if stage is Stage.PROLONGED:
        I1 = closed_form_I1(ode)
        report.torsion["I1+u1*u3*I"] = _coef(report.equations["Omega1"], "theta3", "theta1")
        report.torsion["dOmega1[theta2^theta1]"] = _coef(report.equations["Omega1"], "theta2", "theta1")
        report.checks["dOmega1"] = d["Omega1"] == cf.wedge_of("Omega2", "theta2") + theta31.scale(I1 + u1 * u3 * I)
        reference = _prolonged_reference_dOmega2(cf, with_I_term=False)
        completed = _prolonged_reference_dOmega2(cf, with_I_term=True)
        # informational: the reference dOmega2 is compared, never asserted
        report.notes["dOmega2 reference"] = "matched" if d["Omega2"] == reference else "unmatched"
        report.notes["dOmega2 reference + u3^2*I"] = "matched" if d["Omega2"] == completed else "unmatched"
    return report


@lru_cache(maxsize=None)
def resolve_pi2_variant() -> Tuple[str, Dict[str, bool]]:
    """Pick the reading of pi2's last term under which the reduced equations hold.

    Runs the reduced and prolonged identity checks in formal mode for both
    readings; exactly one must pass.
    """
    ode = OdeInput.formal()
    results = {}
    for v in PI2_VARIANTS:
        red = verify_structure_equations(ode, Stage.REDUCED, v)
        results[v] = red.ok
    passing = [v for v, ok in results.items() if ok]
    if len(passing) != 1:
        raise AssertionError(f"expected exactly one passing pi2 reading, got {results}")
    log.info("pi2 reading resolved to %s (%s)", passing[0], results)
    return passing[0], results


# ---------------------------------------------------------------------------
# Invariants


def _section(e: Expr) -> Expr:
    return e.subs({U1: ONE, U3: ZERO})


def extract_invariants(ode: OdeInput, pi2_variant: Optional[str] = None) -> InvariantSet:
    """I1 from d Omega1 and I2, I3 from d Omega2, read off in the prolonged coframe."""
    variant = pi2_variant or resolve_pi2_variant()[0]
    cf = build_stage_coframe(ode, Stage.PROLONGED, variant)
    dO1 = _table(cf, exterior_derivative(cf["Omega1"]), check_reconstruction=False)
    dO2 = _table(cf, exterior_derivative(cf["Omega2"]), check_reconstruction=False)
    I1 = _coef(dO1, "theta3", "theta1")
    I2 = _coef(dO2, "theta2", "theta1")
    I3 = _coef(dO2, "theta3", "theta1")
    I = relative_invariant(ode)
    inv = InvariantSet(
        I=I,
        I1=I1,
        I2=I2,
        I3=I3,
        provenance={"I1": "extracted", "I2": "extracted", "I3": "extracted"},
    )
    inv.extra.update(
        {
            "I1_section": _section(I1),
            "I2_section": _section(I2),
            "I3_section": _section(I3),
            "I1_closed_form": closed_form_I1(ode),
            "I2_closed_form": closed_form_I2_section(ode),
            "I3_closed_form": closed_form_I3_section(ode),
        }
    )
    return inv


@dataclass
class SyzygyReport:
    residuals: Dict[str, Dict[str, Expr]]
    J: Dict[str, Expr]

    @property
    def all_zero(self) -> bool:
        return all(not v for r in self.residuals.values() for v in r.values())


def syzygy_check(ode: OdeInput, pi2_variant: Optional[str] = None) -> SyzygyReport:
    """Residuals of the three differential relations among I1, I2, I3.

    J is read from the second relation (its theta2 coefficient) and reused in
    the third; every other off-ideal coefficient is a residual.
    """
    variant = pi2_variant or resolve_pi2_variant()[0]
    cf = build_stage_coframe(ode, Stage.PROLONGED, variant)
    inv = extract_invariants(ode, variant)
    I1, I2, I3 = inv.I1, inv.I2, inv.I3

    def d(g: Expr) -> DiffForm:
        return exterior_derivative(DiffForm.function(cf.chart, g))

    def comps(form: DiffForm) -> Dict[str, Expr]:
        c = cf.basis.express(form)
        return {cf.basis.names[k[0]]: v for k, v in c.items()}

    rel1 = comps(d(I1) + cf["theta2"].scale(I3))
    rel2 = comps(d(I3) + cf["Omega1"].scale(2 * I3) - cf["Omega2"].scale(2 * I1))
    J = -rel2.get("theta2", ZERO)
    rel3 = comps(d(I2) + cf["Omega1"].scale(5 * I2) + cf["theta3"].scale(J))
    out = {
        "dI1+I3*theta2 mod(theta1,theta3)": {
            k: v for k, v in rel1.items() if k not in ("theta1", "theta3")
        },
        "dI3+2*I3*Omega1-2*I1*Omega2+J*theta2 mod(theta1,theta3)": {
            k: v for k, v in rel2.items() if k not in ("theta1", "theta3", "theta2")
        },
        "dI2+5*I2*Omega1+J*theta3 mod(theta1,theta2)": {
            k: v for k, v in rel3.items() if k not in ("theta1", "theta2")
        },
    }
    report = SyzygyReport({k: {n: v for n, v in r.items() if v} for k, r in out.items()}, {"J": J})
    for k, r in report.residuals.items():
        for n, v in r.items():
            log.debug("syzygy residual %s [%s] = %s", k, n, v)
    return report


# ---------------------------------------------------------------------------
# Cartan test


@dataclass(frozen=True)
class CharacterReport:
    s1: int
    s2: int
    s3: int
    dim_g1: int
    involutive: bool


def _tableau(v: List[Expr]) -> List[List[Expr]]:
    return [[v[0], ZERO], [2 * v[1], ZERO], [-v[2], v[0]]]


def cartan_characters() -> CharacterReport:
    """Reduced characters of the tableau of the reduced structure equations."""
    v1 = [Expr(const_symbol(f"v1_{i}")) for i in range(3)]
    v2 = [Expr(const_symbol(f"v2_{i}")) for i in range(3)]
    s1 = rank(_tableau(v1))
    s12 = rank(_tableau(v1) + _tableau(v2))
    total = 2
    s2 = s12 - s1
    s3 = total - s12
    # t1 in theta1-shift of pi2 is the only freedom preserving the equations
    dim_g1 = 1
    return CharacterReport(s1, s2, s3, dim_g1, dim_g1 == s1 + 2 * s2 + 3 * s3)


def pi_ambiguity_dimension(ode: Optional[OdeInput] = None) -> int:
    """Count of shifts pi^a -> pi^a + z^a_b theta^b preserving the reduced equations.

    Solves the linear conditions on the six unknowns z^a_b directly.
    """
    z = {(a, b): Expr(const_symbol(f"z{a}{b}")) for a in (1, 2) for b in (1, 2, 3)}
    ode = ode or OdeInput.formal()
    cf = build_stage_coframe(ode, Stage.REDUCED, resolve_pi2_variant()[0])
    shift = {
        a: sum((cf[f"theta{b}"].scale(z[(a, b)]) for b in (1, 2, 3)), DiffForm.zero(cf.chart))
        for a in (1, 2)
    }
    # changes of the three structure equations induced by the shifts
    deltas = [
        wedge(shift[1], cf["theta1"]),
        wedge(shift[1], cf["theta2"]).scale(2),
        wedge(shift[2], cf["theta1"]) - wedge(shift[1], cf["theta3"]),
    ]
    rows = []
    keys = list(z)
    for delta in deltas:
        for coeff in cf.basis.express(delta).values():
            rows.append([coeff.diff(const_symbol(f"z{a}{b}")) for (a, b) in keys])
    return len(keys) - rank(rows)


# ---------------------------------------------------------------------------
# Non-vanishing branch


@dataclass
class EStructure3:
    """Three 1-forms on J^1 with coefficients in Q(x, y, p)[r], r^2 = eps * I."""

    eps: int
    radicand: Expr
    forms: List[List[QuadExtExpr]]  # rows: forms; columns: dx, dy, dp
    determinant: QuadExtExpr

    @property
    def u1(self) -> QuadExtExpr:
        return QuadExtExpr.root(self.radicand).inverse()


def _det3(m) -> object:
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


def reduce_nonvanishing_branch(ode: OdeInput, eps: int) -> EStructure3:
    """Normalise u1^2 * I = eps and u3 = 0 in the reduced coframe."""
    if eps not in (1, -1):
        raise ValueError("eps must be +1 or -1")
    if ode.is_formal:
        raise ValueError("the non-vanishing branch needs a concrete right-hand side")
    I = relative_invariant(ode)
    if not I:
        raise InvariantVanishes("relative invariant vanishes identically")
    rho = I * eps
    r = QuadExtExpr.root(rho)
    u1 = r.inverse()
    w1, w2, w3 = _contact_forms(ode, BASE3, reduced=True)

    def row(form: DiffForm, scale: QuadExtExpr) -> List[QuadExtExpr]:
        return [scale * form.terms.get((j,), ZERO) for j in range(3)]

    forms = [row(w1, u1), row(w2, u1 * u1), row(w3, u1.inverse())]
    det = _det3(forms)
    if det.is_zero():
        raise AssertionError("reduced forms are dependent")
    return EStructure3(eps, rho, forms, det)


# ---------------------------------------------------------------------------
# Classification

SAMPLE_VALUES = (Fraction(-5, 2), Fraction(-1), Fraction(-1, 3), Fraction(1, 2), Fraction(1), Fraction(7, 3))


def sample_points(e: Expr, limit: int = 64):
    """Deterministic rational points avoiding poles of ``e``."""
    syms = sorted(e.free_symbols(), key=lambda s: s.sort_key)
    n = 0
    for values in itertools.product(SAMPLE_VALUES, repeat=len(syms)):
        point = dict(zip(syms, values))
        try:
            yield point, e.evaluate(point)
        except ArithmeticError:
            continue
        n += 1
        if n >= limit:
            return


def probe_sign(e: Expr, limit: int = 64) -> Optional[int]:
    """Common sign of ``e`` over sample points, or ``None`` if it changes."""
    signs = {(v > 0) - (v < 0) for _, v in sample_points(e, limit)} - {0}
    if len(signs) == 1:
        return signs.pop()
    return None


@dataclass
class BranchVerdict:
    kind: str  # "flat" | "non-vanishing" | "mixed-signal"
    I: Expr
    eps: Optional[int] = None
    linearizability: Optional[LinearizabilityVerdict] = None
    invariants: Optional[InvariantSet] = None
    estructure: Optional[EStructure3] = None


def classify(ode: OdeInput) -> BranchVerdict:
    if ode.is_formal:
        raise ValueError("classification needs a concrete right-hand side")
    I = relative_invariant(ode)
    if not I:
        return BranchVerdict(
            "flat", I, linearizability=is_linearizable(ode), invariants=extract_invariants(ode)
        )
    eps = probe_sign(I)
    if eps is None:
        return BranchVerdict("mixed-signal", I)
    return BranchVerdict("non-vanishing", I, eps=eps, estructure=reduce_nonvanishing_branch(ode, eps))

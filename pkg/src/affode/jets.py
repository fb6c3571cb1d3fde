"""Scalar differential invariants of y'' = f(x, y, y')."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional

from .expr import P, X, Y, ZERO, Expr, fjet, jet_derivative
from .parser import parse_expr

__all__ = [
    "OdeInput",
    "NotCubic",
    "CubicCoefficients",
    "ClosureResiduals",
    "InvariantSet",
    "LinearizabilityVerdict",
    "total_derivative",
    "relative_invariant",
    "cubic_decompose",
    "closure_residuals",
    "is_linearizable",
    "closed_form_invariants",
]

THIRD = Fraction(1, 3)


class OdeInput:
    """Right-hand side of y'' = f in concrete or formal mode.

    In formal mode ``f`` is the jet symbol and ``jet(i, j, k)`` returns the
    corresponding jet symbol; in concrete mode it returns the actual
    derivative of ``f``.
    """

    def __init__(self, f: Optional[Expr] = None, source: Optional[str] = None):
        if f is None:
            self.mode = "formal"
            self.f = fjet()
        else:
            bad = [s for s in f.free_symbols() if s.kind not in ("base", "const")]
            if bad:
                raise ValueError(
                    "a concrete right-hand side may only involve x, y, y' and free constants; got "
                    + ", ".join(sorted(map(str, bad)))
                )
            self.mode = "concrete"
            self.f = f
        self.source = source if source is not None else (str(self.f) if f is not None else "f")
        self._jets: Dict[tuple, Expr] = {}

    @classmethod
    def formal(cls) -> "OdeInput":
        return cls()

    @classmethod
    def parse(cls, text: str) -> "OdeInput":
        return cls(parse_expr(text), source=text)

    @property
    def is_formal(self) -> bool:
        return self.mode == "formal"

    def jet(self, i: int = 0, j: int = 0, k: int = 0) -> Expr:
        if self.is_formal:
            return fjet(i, j, k)
        return jet_derivative(self.f, i, j, k, self._jets)

    # frequently used jets
    @property
    def fp(self) -> Expr:
        return self.jet(0, 0, 1)

    @property
    def fpp(self) -> Expr:
        return self.jet(0, 0, 2)

    @property
    def fppp(self) -> Expr:
        return self.jet(0, 0, 3)

    def D(self, g: Expr) -> Expr:
        return total_derivative(g, self)

    def __repr__(self):
        return f"OdeInput({self.mode}: {self.source})"


def total_derivative(g: Expr, ode: OdeInput) -> Expr:
    """``d/dx + y' d/dy + f d/dy'`` applied to ``g``."""
    return g.diff(X) + Expr(P) * g.diff(Y) + ode.f * g.diff(P)


def relative_invariant(ode: OdeInput) -> Expr:
    """``f_y + (2/9) f_p^2 - (1/3) D(f_p)``."""
    fp = ode.fp
    return ode.jet(0, 1, 0) + Fraction(2, 9) * fp * fp - THIRD * total_derivative(fp, ode)


class NotCubic(ValueError):
    """``f`` is not a polynomial of degree at most 3 in y'."""

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


@dataclass(frozen=True)
class CubicCoefficients:
    """``f = A p^3 + 3 B p^2 + 3 C p + D``."""

    A: Expr
    B: Expr
    C: Expr
    D: Expr

    def reconstruct(self) -> Expr:
        p = Expr(P)
        return self.A * p ** 3 + 3 * self.B * p ** 2 + 3 * self.C * p + self.D


@dataclass(frozen=True)
class ClosureResiduals:
    r1: Expr
    r2: Expr
    r3: Expr

    def all_zero(self) -> bool:
        return not (self.r1 or self.r2 or self.r3)

    def as_tuple(self):
        return (self.r1, self.r2, self.r3)


def cubic_decompose(ode: OdeInput) -> CubicCoefficients:
    if ode.is_formal:
        raise ValueError("cubic decomposition needs a concrete right-hand side")
    f = ode.f
    try:
        coeffs = f.coefficients_in(P)
    except ValueError:
        raise NotCubic("y' occurs in a denominator") from None
    deg = max(coeffs, default=0)
    if deg > 3:
        raise NotCubic(f"degree {deg} in y'")
    c = [coeffs.get(k, ZERO) for k in range(4)]
    return CubicCoefficients(A=c[3], B=c[2] * THIRD, C=c[1] * THIRD, D=c[0])


def closure_residuals(c: CubicCoefficients) -> ClosureResiduals:
    A, B, C, D = c.A, c.B, c.C, c.D
    r1 = D.diff(Y) - C.diff(X) - 2 * (B * D - C * C)
    r2 = C.diff(Y) - B.diff(X) - (A * D - B * C)
    r3 = B.diff(Y) - A.diff(X) - 2 * (A * C - B * B)
    return ClosureResiduals(r1, r2, r3)


@dataclass(frozen=True)
class LinearizabilityVerdict:
    linearizable: bool
    residuals: Optional[ClosureResiduals]
    not_cubic: Optional[str] = None

    @property
    def witness(self) -> Optional[str]:
        """First failing condition, rendered; ``None`` when linearizable."""
        if self.not_cubic is not None:
            return f"not-cubic: {self.not_cubic}"
        if self.residuals is None or self.linearizable:
            return None
        for name, r in zip(("r1", "r2", "r3"), self.residuals.as_tuple()):
            if r:
                return f"{name} = {r}"
        return None

    def __bool__(self) -> bool:
        return self.linearizable


def is_linearizable(ode: OdeInput) -> LinearizabilityVerdict:
    """Decide equivalence to y'' = 0 under area-preserving point maps."""
    try:
        cubic = cubic_decompose(ode)
    except NotCubic as exc:
        return LinearizabilityVerdict(False, None, exc.reason)
    res = closure_residuals(cubic)
    return LinearizabilityVerdict(res.all_zero(), res)


@dataclass
class InvariantSet:
    """Relative invariant ``I`` and the bundle invariants I1, I2, I3.

    ``provenance`` records for each of I1..I3 whether it is a closed form or
    a coefficient extracted from exterior derivatives.
    """

    I: Expr
    I1: Expr
    I2: Optional[Expr] = None
    I3: Optional[Expr] = None
    provenance: Dict[str, str] = field(default_factory=dict)
    extra: Dict[str, Expr] = field(default_factory=dict)

    def all_zero(self) -> bool:
        return not any(v for v in (self.I1, self.I2, self.I3) if v is not None)


def closed_form_I1(ode: OdeInput) -> Expr:
    fp, fpp = ode.fp, ode.fpp
    return (
        -THIRD * ode.jet(0, 1, 1)
        - Fraction(1, 18) * fp * fpp
        + Fraction(1, 6) * total_derivative(fpp, ode)
    )


def closed_form_I3_section(ode: OdeInput) -> Expr:
    """u1 = 1, u3 = 0 value of the reference theta3^theta1 coefficient of dOmega2."""
    fp, fpp, fppp = ode.fp, ode.fpp, ode.fppp
    return (
        Fraction(1, 6) * ode.jet(0, 1, 2)
        - Fraction(1, 6) * total_derivative(fppp, ode)
        - Fraction(1, 9) * fp * fppp
        + Fraction(1, 18) * fpp * fpp
    )


def closed_form_I2_section(ode: OdeInput) -> Expr:
    return -Fraction(1, 6) * ode.jet(0, 0, 4)


def vanishing_conditions(ode: OdeInput):
    """The four reference vanishing conditions, as stated (first one verbatim)."""
    fp, fpp, fppp = ode.fp, ode.fpp, ode.fppp
    D = ode.D
    c1 = Fraction(1, 6) * fppp
    c2 = -Fraction(1, 6) * (2 * ode.jet(0, 1, 1) + THIRD * fp * fpp - D(fpp))
    c3 = relative_invariant(ode)
    c4 = -Fraction(1, 18) * (fpp * fpp - 2 * fp * fppp) - Fraction(1, 6) * (ode.jet(0, 1, 2) - D(fppp))
    return (c1, c2, c3, c4)


def closed_form_invariants(ode: OdeInput) -> InvariantSet:
    I = relative_invariant(ode)
    conds = vanishing_conditions(ode)
    return InvariantSet(
        I=I,
        I1=closed_form_I1(ode),
        I2=closed_form_I2_section(ode),
        I3=closed_form_I3_section(ode),
        provenance={"I1": "closed-form", "I2": "closed-form", "I3": "closed-form"},
        extra={f"vanishing_{n}": c for n, c in enumerate(conds, 1)},
    )

"""Named identity checks, run in formal mode and over the reference corpus."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple

from .connection import (
    connection_curvature,
    equivariance_check,
    fundamental_field_check,
    normalize_connection,
    uniqueness_check,
)
from .corpus import LINEARIZABLE, NOT_LINEARIZABLE
from .expr import U1, U2, Expr
from .jets import OdeInput, closed_form_I1, is_linearizable, relative_invariant
from .pipeline import (
    Stage,
    absorb_initial_torsion,
    cartan_characters,
    extract_invariants,
    resolve_pi2_variant,
    syzygy_check,
    verify_structure_equations,
)

SUITES = ("structure", "connection", "all")


@dataclass(frozen=True)
class CheckResult:
    status: str  # "pass" | "fail" | "skipped"
    detail: str = ""

    def as_dict(self) -> Dict[str, str]:
        out = {"status": self.status}
        if self.detail:
            out["detail"] = self.detail
        return out


def _result(ok: bool, detail: str = "") -> CheckResult:
    return CheckResult("pass" if ok else "fail", detail)


def _failures(items: Dict[str, bool]) -> str:
    bad = [k for k, v in items.items() if not v]
    return "failed: " + ", ".join(bad) if bad else ""


# -- structure suite ---------------------------------------------------------


def check_essential_torsion() -> CheckResult:
    ode = OdeInput.formal()
    ab = absorb_initial_torsion(ode)
    u1, u2 = Expr(U1), Expr(U2)
    ok = ab.essential == u1 * ode.fp + 3 * u2 / u1
    return _result(ok, f"essential torsion = {ab.essential}")


def check_absorbed_T132() -> CheckResult:
    ab = absorb_initial_torsion(OdeInput.formal())
    return _result(ab.T1_32 == 1, f"T1_32 = {ab.T1_32}")


def check_reduced_equations() -> CheckResult:
    rep = verify_structure_equations(OdeInput.formal(), Stage.REDUCED, resolve_pi2_variant()[0])
    return _result(rep.ok, _failures(rep.checks))


def check_reduced_torsion_term() -> CheckResult:
    ode = OdeInput.formal()
    rep = verify_structure_equations(ode, Stage.REDUCED, resolve_pi2_variant()[0])
    u1 = Expr(U1)
    return _result(rep.torsion["u1^2*I"] == u1 * u1 * relative_invariant(ode))


def check_variant_resolution() -> CheckResult:
    chosen, results = resolve_pi2_variant()
    detail = f"chosen {chosen}; " + ", ".join(f"{k}: {'pass' if v else 'fail'}" for k, v in results.items())
    return _result(sum(results.values()) == 1, detail)


def check_prolonged_equations() -> CheckResult:
    rep = verify_structure_equations(OdeInput.formal(), Stage.PROLONGED)
    ok = rep.ok and not rep.torsion["dOmega1[theta2^theta1]"]
    return _result(ok, _failures(rep.checks))


def check_dOmega2_reference() -> CheckResult:
    rep = verify_structure_equations(OdeInput.formal(), Stage.PROLONGED)
    # informational: reported, never failed
    return CheckResult("pass", "; ".join(f"{k}: {v}" for k, v in rep.notes.items()))


def check_cartan_characters() -> CheckResult:
    c = cartan_characters()
    ok = (c.s1, c.s2, c.s3, c.dim_g1, c.involutive) == (2, 0, 0, 1, False)
    return _result(ok, f"s = ({c.s1}, {c.s2}, {c.s3}), dim g1 = {c.dim_g1}, involutive = {c.involutive}")


def check_I1_extraction() -> CheckResult:
    ode = OdeInput.formal()
    inv = extract_invariants(ode)
    return _result(inv.extra["I1_section"] == closed_form_I1(ode))


def check_linearizability_corpus() -> CheckResult:
    wrong = [f for f in LINEARIZABLE if not is_linearizable(OdeInput.parse(f))]
    for f, witness in NOT_LINEARIZABLE.items():
        v = is_linearizable(OdeInput.parse(f))
        if v or v.witness != witness:
            wrong.append(f)
    return _result(not wrong, "wrong verdicts: " + ", ".join(wrong) if wrong else "")


def check_flat_invariants() -> CheckResult:
    bad = []
    for f in LINEARIZABLE:
        inv = extract_invariants(OdeInput.parse(f))
        if not inv.all_zero():
            bad.append(f)
    return _result(not bad, ", ".join(bad))


def check_flat_syzygies() -> CheckResult:
    bad = [f for f in LINEARIZABLE if not syzygy_check(OdeInput.parse(f)).all_zero]
    return _result(not bad, ", ".join(bad))


# -- connection suite --------------------------------------------------------


def check_maurer_cartan() -> CheckResult:
    rep = fundamental_field_check(OdeInput.formal())
    return _result(rep.flat and rep.adjoint)


def check_vertical_restriction() -> CheckResult:
    return _result(fundamental_field_check(OdeInput.formal()).vertical_match)


def check_equivariance_components() -> CheckResult:
    rep = equivariance_check(OdeInput.formal())
    return _result(all(rep.components.values()), _failures(rep.components))


def check_equivariance_full() -> CheckResult:
    return _result(equivariance_check(OdeInput.formal()).full_matrix)


def check_curvature_equivariance() -> CheckResult:
    bad = [
        f for f in LINEARIZABLE + tuple(NOT_LINEARIZABLE)
        if not equivariance_check(OdeInput.parse(f), include_curvature=True).curvature
    ]
    return _result(not bad, ", ".join(bad))


def check_curvature_shape() -> CheckResult:
    res = connection_curvature(OdeInput.formal())
    return _result(res.asl_shaped and bool(res.formal_matched))


def check_flat_curvature() -> CheckResult:
    bad = []
    for f in LINEARIZABLE:
        res = connection_curvature(OdeInput.parse(f))
        if not (res.matched and res.K.is_zero()):
            bad.append(f)
    return _result(not bad, ", ".join(bad))


def check_normalization_solution() -> CheckResult:
    sol = normalize_connection(OdeInput.formal())
    keys = ("torsion-free", "R-solved", "mu", "delta", "nu", "trace-free")
    sub = {k: sol.checks[k] for k in keys}
    return _result(all(sub.values()), f"mu = {sol.mu}, delta = {sol.delta}, nu = {sol.nu}")


def check_normalization_eta() -> CheckResult:
    return _result(normalize_connection(OdeInput.formal()).checks["eta-closed-form"])


def check_normalization_R_reference() -> CheckResult:
    sol = normalize_connection(OdeInput.formal())
    sub = {k: v for k, v in sol.checks.items() if k.endswith("-reference")}
    return _result(all(sub.values()), _failures(sub))


def check_uniqueness() -> CheckResult:
    bad = [f for f in LINEARIZABLE if not uniqueness_check(OdeInput.parse(f))]
    formal = uniqueness_check(OdeInput.formal(), require_flat=False)
    detail = "formal mode: " + ("identical" if formal.equal else f"residual entries {sorted(formal.residuals)}")
    if bad:
        detail += "; failing: " + ", ".join(bad)
    return _result(not bad, detail)


def check_lifted_curvature_identity() -> CheckResult:
    return _result(uniqueness_check(OdeInput.formal(), require_flat=False).curvature_identity)


STRUCTURE_CHECKS: List[Tuple[str, Callable[[], CheckResult]]] = [
    ("essential-torsion", check_essential_torsion),
    ("absorbed-torsion-unit", check_absorbed_T132),
    ("reduced-structure-equations", check_reduced_equations),
    ("reduced-torsion-term", check_reduced_torsion_term),
    ("pi2-variant-resolution", check_variant_resolution),
    ("prolonged-structure-equations", check_prolonged_equations),
    ("dOmega2-reference-comparison", check_dOmega2_reference),
    ("cartan-characters", check_cartan_characters),
    ("I1-extraction", check_I1_extraction),
    ("corpus-linearizability", check_linearizability_corpus),
    ("corpus-flat-invariants", check_flat_invariants),
    ("corpus-flat-syzygies", check_flat_syzygies),
]

CONNECTION_CHECKS: List[Tuple[str, Callable[[], CheckResult]]] = [
    ("maurer-cartan-flat", check_maurer_cartan),
    ("vertical-restriction", check_vertical_restriction),
    ("equivariance-components", check_equivariance_components),
    ("equivariance-full-matrix", check_equivariance_full),
    ("curvature-equivariance", check_curvature_equivariance),
    ("curvature-asl-shape", check_curvature_shape),
    ("corpus-flat-curvature", check_flat_curvature),
    ("normalization-mu-delta-nu", check_normalization_solution),
    ("normalization-eta", check_normalization_eta),
    ("normalization-R-components", check_normalization_R_reference),
    ("uniqueness", check_uniqueness),
    ("lifted-curvature-identity", check_lifted_curvature_identity),
]


def suite_checks(suite: str) -> List[Tuple[str, Callable[[], CheckResult]]]:
    if suite == "structure":
        return list(STRUCTURE_CHECKS)
    if suite == "connection":
        return list(CONNECTION_CHECKS)
    if suite == "all":
        return STRUCTURE_CHECKS + CONNECTION_CHECKS
    raise ValueError(f"unknown suite {suite!r}")


def run_suite(suite: str) -> Dict[str, CheckResult]:
    """Run the checks of ``suite`` in declaration order."""
    return {name: fn() for name, fn in suite_checks(suite)}

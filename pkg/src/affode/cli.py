"""Command-line front end.

Exit codes: 0 success, 2 unusable input, 3 internal inconsistency (including
failed verification checks), 4 curvature requested off the flat branch,
5 expression-size guard tripped.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from typing import Dict, List, Optional

from .connection import connection_curvature
from .expr import DegreeLimitExceeded, Expr, instantiate_jets
from .forms import CoframeNotInvertible
from .jets import (
    NotCubic,
    OdeInput,
    closed_form_I1,
    closure_residuals,
    cubic_decompose,
    is_linearizable,
    relative_invariant,
)
from .parser import ParseError
from .pipeline import Stage, build_stage_coframe, classify, extract_invariants, resolve_pi2_variant
from .verify import SUITES, run_suite

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INTERNAL = 3
EXIT_NOT_FLAT = 4
EXIT_DEGREE = 5


class InternalInconsistency(RuntimeError):
    pass


class NotFlat(RuntimeError):
    def __init__(self, invariant: Expr):
        self.invariant = invariant
        super().__init__(f"relative invariant I = {invariant} is not identically zero")


def _ms(start: float) -> float:
    return round((time.perf_counter() - start) * 1000.0, 3)


def _parse_input(text: str) -> OdeInput:
    try:
        return OdeInput.parse(text)
    except ParseError:
        raise
    except ValueError as exc:
        # concrete input containing bundle or jet symbols
        raise ParseError(str(exc), text, 0) from None


def _residuals(ode: OdeInput) -> Optional[Dict[str, str]]:
    try:
        res = closure_residuals(cubic_decompose(ode))
    except NotCubic:
        return None
    return {"r1": str(res.r1), "r2": str(res.r2), "r3": str(res.r3)}


def _cross_check(ode: OdeInput, flat: bool) -> Dict[str, bool]:
    """Concrete results against formal-mode results with jets instantiated."""
    formal = OdeInput.formal()

    def inst(e: Expr) -> Expr:
        return instantiate_jets(e, ode.f)

    out = {
        "relative_invariant": relative_invariant(ode) == inst(relative_invariant(formal)),
        "I1_closed_form": closed_form_I1(ode) == inst(closed_form_I1(formal)),
    }
    if flat:
        conc = extract_invariants(ode)
        form = extract_invariants(formal)
        for name in ("I1", "I2", "I3"):
            out[f"{name}_extracted"] = getattr(conc, name) == inst(getattr(form, name))
    return out


def analyze(text: str, formal_cross_check: bool = False) -> Dict:
    start = time.perf_counter()
    ode = _parse_input(text)
    verdict = classify(ode)
    flat = verdict.kind == "flat"
    lin = verdict.linearizability
    if lin is None:
        lin = is_linearizable(ode)
    report: Dict = {"schema_version": SCHEMA_VERSION, "input": text, "branch": verdict.kind}
    report["epsilon"] = verdict.eps
    report["linearizable"] = "not-cubic" if lin.not_cubic is not None else lin.linearizable
    report["witness"] = lin.witness
    report["relative_invariant"] = str(verdict.I)
    report["closure_residuals"] = _residuals(ode)
    if flat:
        inv = verdict.invariants
        report["invariants"] = {k: str(inv.extra[f"{k}_section"]) for k in ("I1", "I2", "I3")}
        curv = connection_curvature(ode)
        if not curv.matched:
            raise InternalInconsistency("curvature does not match the extracted invariants")
        report["curvature_zero"] = curv.K.is_zero()
        if lin.linearizable != (inv.all_zero()):
            raise InternalInconsistency("flat branch: vanishing invariants disagree with the linearizability test")
    else:
        report["invariants"] = None
        report["curvature_zero"] = "n/a"
    if verdict.estructure is not None:
        report["frame_determinant"] = str(verdict.estructure.determinant)
    report["typo_resolution"] = {"pi2_last_term": resolve_pi2_variant()[0]}
    if formal_cross_check:
        checks = _cross_check(ode, flat)
        report["formal_cross_check"] = checks
        if not all(checks.values()):
            raise InternalInconsistency("formal cross-check failed: " + json.dumps(checks, sort_keys=True))
    report["timing_ms"] = _ms(start)
    return report


def curvature(text: str) -> Dict:
    start = time.perf_counter()
    ode = _parse_input(text)
    I = relative_invariant(ode)
    if I:
        raise NotFlat(I)
    res = connection_curvature(ode)
    cf = build_stage_coframe(ode, Stage.PROLONGED, resolve_pi2_variant()[0])
    entries: List[List[str]] = []
    for i in range(3):
        row = []
        for j in range(3):
            coeffs = cf.basis.express(res.K[i, j])
            terms = [f"({v})*{cf.basis.monomial_name(k)}" for k, v in sorted(coeffs.items())]
            row.append(" + ".join(terms) if terms else "0")
        entries.append(row)
    return {
        "schema_version": SCHEMA_VERSION,
        "input": text,
        "coframe": list(cf.basis.names),
        "K": entries,
        "matched": bool(res.matched),
        "timing_ms": _ms(start),
    }


def verify(suite: str) -> Dict:
    start = time.perf_counter()
    results = run_suite(suite)
    return {
        "schema_version": SCHEMA_VERSION,
        "suite": suite,
        "checks": [{"name": name, **r.as_dict()} for name, r in results.items()],
        "passed": all(r.status != "fail" for r in results.values()),
        "timing_ms": _ms(start),
    }


def _dump(report: Dict) -> str:
    return json.dumps(report, indent=2, ensure_ascii=False)


def _human(report: Dict) -> str:
    lines = []
    for key, value in report.items():
        if isinstance(value, dict):
            lines.append(f"{key}:")
            lines.extend(f"  {k}: {v}" for k, v in value.items())
        elif isinstance(value, list) and key == "checks":
            for c in value:
                extra = f"  ({c['detail']})" if c.get("detail") else ""
                lines.append(f"  [{c['status']}] {c['name']}{extra}")
        elif isinstance(value, list):
            lines.append(f"{key}:")
            lines.extend(f"  {row}" for row in value)
        else:
            lines.append(f"{key}: {value}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="affode", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log pipeline decisions to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="classify y'' = f and report its invariants")
    p.add_argument("--f", required=True, dest="f_text", help="right-hand side, e.g. \"y'^3 + x\"")
    p.add_argument("--json", action="store_true")
    p.add_argument("--formal-cross-check", action="store_true", help="compare against formal-mode results")

    p = sub.add_parser("verify", help="run the identity checks")
    p.add_argument("--suite", choices=SUITES, default="all")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("curvature", help="curvature of the connection on the flat branch")
    p.add_argument("--f", required=True, dest="f_text")
    p.add_argument("--json", action="store_true")
    return parser


def _join_values(argv: List[str]) -> List[str]:
    # lets ``--f "-3*y'/(2*x)"`` through; argparse would read it as an option
    out: List[str] = []
    it = iter(argv)
    for a in it:
        if a == "--f":
            nxt = next(it, None)
            out.append(a if nxt is None else f"--f={nxt}")
        else:
            out.append(a)
    return out


def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_values(argv))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        if args.command == "analyze":
            report = analyze(args.f_text, args.formal_cross_check)
        elif args.command == "curvature":
            report = curvature(args.f_text)
        else:
            report = verify(args.suite)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NotFlat as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_FLAT
    except DegreeLimitExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGREE
    except (InternalInconsistency, CoframeNotInvertible, AssertionError, ArithmeticError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    print(_dump(report) if args.json else _human(report))
    if args.command == "verify" and not report["passed"]:
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

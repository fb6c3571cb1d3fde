"""Acceptance criteria, one test each, with a pass/fail line per criterion."""

import os
import random
import re
import subprocess
import sys
import time
from fractions import Fraction
from pathlib import Path

import sympy

from affode import pipeline
from affode.connection import (
    connection_curvature,
    equivariance_check,
    fundamental_field_check,
    normalize_connection,
    uniqueness_check,
)
from affode.corpus import LINEARIZABLE, NOT_LINEARIZABLE
from affode.expr import P, U1, U2, U3, X, Y, Expr, const_symbol
from affode.forms import BUNDLE5, DiffForm, exterior_derivative, wedge
from affode.jets import (
    OdeInput,
    closed_form_I1,
    closure_residuals,
    cubic_decompose,
    is_linearizable,
    relative_invariant,
)
from affode.pipeline import (
    Stage,
    cartan_characters,
    essential_torsion,
    extract_invariants,
    resolve_pi2_variant,
    verify_structure_equations,
)
from affode.verify import run_suite

from oracles import close, exact_lambda, fd_invariants, sb, sp, sx, sy, sympy_I, to_sympy

FORMAL = OdeInput.formal()
u1, u2, u3 = Expr(U1), Expr(U2), Expr(U3)
GOLDEN = Path(__file__).parent / "golden"


def record(log, n, ok, started, limit=None, detail=""):
    elapsed = time.perf_counter() - started
    in_time = limit is None or elapsed < limit
    status = "PASS" if ok and in_time else "FAIL"
    budget = f" (limit {limit:g}s)" if limit is not None else ""
    line = f"criterion {n}: {status} [{elapsed:.2f}s{budget}] {detail}".rstrip()
    print(line)
    log.append(line)
    assert ok, line
    assert in_time, line


def test_criterion_01_essential_torsion(acceptance_log):
    t = time.perf_counter()
    value = essential_torsion(FORMAL)
    ok = value == u1 * FORMAL.fp + 3 * u2 / u1
    record(acceptance_log, 1, ok, t, 5, f"essential torsion = {value}")


def test_criterion_02_reduced_structure_equations(acceptance_log):
    t = time.perf_counter()
    rep = verify_structure_equations(FORMAL, Stage.REDUCED, "theta3")
    term = rep.torsion["u1^2*I"] == u1 * u1 * relative_invariant(FORMAL)
    record(acceptance_log, 2, rep.ok and term, t, 10, f"checks {rep.checks}")


def test_criterion_03_prolonged_identities(acceptance_log):
    t = time.perf_counter()
    rep = verify_structure_equations(FORMAL, Stage.PROLONGED, "theta3")
    torsion = rep.torsion["I1+u1*u3*I"] == closed_form_I1(FORMAL) + u1 * u3 * relative_invariant(FORMAL)
    zero21 = rep.torsion["dOmega1[theta2^theta1]"].is_zero()
    record(acceptance_log, 3, rep.ok and torsion and zero21, t, 60, f"checks {rep.checks}")


def test_criterion_04_typo_resolution(acceptance_log):
    t = time.perf_counter()
    pipeline.resolve_pi2_variant.cache_clear()
    first = resolve_pi2_variant()
    pipeline.resolve_pi2_variant.cache_clear()
    second = resolve_pi2_variant()
    passing = [v for v, ok in first[1].items() if ok]
    suite = run_suite("all")["pi2-variant-resolution"]
    ok = first == second and len(passing) == 1 and suite.status == "pass" and passing[0] in suite.detail
    record(acceptance_log, 4, ok, t, None, f"chosen {first[0]}; {first[1]}")


def test_criterion_05_cartan_characters(acceptance_log):
    t = time.perf_counter()
    c = cartan_characters()
    ok = (c.s1, c.s2, c.s3, c.dim_g1, c.involutive) == (2, 0, 0, 1, False)
    record(acceptance_log, 5, ok, t, 1, f"s = ({c.s1}, {c.s2}, {c.s3}), dim g1 = {c.dim_g1}")


def test_criterion_06_linearizability_corpus(acceptance_log):
    t = time.perf_counter()
    wrong = [f for f in LINEARIZABLE if not is_linearizable(OdeInput.parse(f))]
    for f, witness in NOT_LINEARIZABLE.items():
        v = is_linearizable(OdeInput.parse(f))
        if v.linearizable or v.witness != witness:
            wrong.append(f)
    record(acceptance_log, 6, not wrong, t, 10, f"misclassified: {wrong}" if wrong else "all verdicts correct")


def _random_poly_xy(rng):
    out = Expr(0)
    for i in range(3):
        for j in range(3 - i):
            c = rng.randint(-3, 3)
            if c and rng.random() < 0.4:
                out = out + c * Expr(X) ** i * Expr(Y) ** j
    return out


def _sympy_residuals(A, B, C, D):
    r1 = sympy.diff(D, sy) - sympy.diff(C, sx) - 2 * (B * D - C * C)
    r2 = sympy.diff(C, sy) - sympy.diff(B, sx) - (A * D - B * C)
    r3 = sympy.diff(B, sy) - sympy.diff(A, sx) - 2 * (A * C - B * B)
    return [sympy.expand(r) for r in (r1, r2, r3)]


def test_criterion_07_cubic_equivalence(acceptance_log):
    t = time.perf_counter()
    rng = random.Random(20240607)
    cases = 0
    mismatches = []
    flat_cases = 0
    p = Expr(P)
    for n in range(150):
        if n % 3 == 0:
            # every third case is f = D(x), which always lies in the flat set
            a = _random_poly_xy(rng)
            coeffs = [Expr(0), Expr(0), Expr(0), a.subs({Y: Expr(0)})]
        else:
            coeffs = [_random_poly_xy(rng) for _ in range(4)]
        A, B, C, D = coeffs
        f = A * p**3 + 3 * B * p**2 + 3 * C * p + D
        o = OdeInput(f)
        engine_flat = not relative_invariant(o)
        engine_closed = closure_residuals(cubic_decompose(o)).all_zero()
        sA, sB, sC, sD = (to_sympy(c) for c in coeffs)
        sf = sA * sp**3 + 3 * sB * sp**2 + 3 * sC * sp + sD
        oracle_flat = sympy.expand(sympy_I(sf)) == 0
        oracle_closed = all(r == 0 for r in _sympy_residuals(sA, sB, sC, sD))
        if not (engine_flat == engine_closed == oracle_flat == oracle_closed):
            mismatches.append(str(f))
        flat_cases += engine_flat
        cases += 1
    ok = cases >= 100 and not mismatches
    record(acceptance_log, 7, ok, t, None, f"{cases} cubics, {flat_cases} flat, mismatches {mismatches[:3]}")


def test_criterion_08_curvature_flatness(acceptance_log):
    t = time.perf_counter()
    bad = []
    for f in LINEARIZABLE:
        o = OdeInput.parse(f)
        inv = extract_invariants(o)
        curv = connection_curvature(o)
        if not (inv.all_zero() and curv.K.is_zero() and curv.matched):
            bad.append(f)
    record(acceptance_log, 8, not bad, t, 120, f"non-flat: {bad}" if bad else f"{len(LINEARIZABLE)} flat inputs")


def test_criterion_09_equivariance(acceptance_log):
    t = time.perf_counter()
    rep = equivariance_check(FORMAL)
    ok = all(rep.components.values()) and rep.full_matrix
    record(acceptance_log, 9, ok, t, 60, f"components {rep.components}, full {rep.full_matrix}")


def test_criterion_10_maurer_cartan(acceptance_log):
    t = time.perf_counter()
    rep = fundamental_field_check(FORMAL)
    record(acceptance_log, 10, rep.flat and rep.vertical_match, t, 10, f"{rep}")


def test_criterion_11_normalization(acceptance_log):
    t = time.perf_counter()
    sol = normalize_connection(FORMAL)
    fp, fpp, fppp = FORMAL.fp, FORMAL.fpp, FORMAL.fppp
    solved = (sol.mu, sol.delta, sol.nu) == (-fp / 3, fpp / 6, fppp / 6)
    eta = sol.checks["eta-closed-form"]
    unique = all(uniqueness_check(OdeInput.parse(f)) for f in LINEARIZABLE)
    lifted = uniqueness_check(FORMAL, require_flat=False).curvature_identity
    ok = solved and eta and unique and lifted
    record(acceptance_log, 11, ok, t, 60, f"mu={sol.mu}, delta={sol.delta}, nu={sol.nu}")


def _random_expr(rng, variables, terms=3, max_exp=2):
    out = Expr(0)
    for _ in range(rng.randint(1, terms)):
        term = Expr(rng.randint(-4, 4))
        for v in variables:
            term = term * Expr(v) ** rng.randint(0, max_exp)
        out = out + term
    return out


def _random_rational(rng, variables):
    den = Expr(0)
    while not den:
        den = _random_expr(rng, variables, terms=2, max_exp=1)
    return _random_expr(rng, variables) / den


def test_criterion_12_calculus_substrate(acceptance_log):
    t = time.perf_counter()
    rng = random.Random(7)
    coords = (X, Y, P, U1, U3)
    failures = 0
    for _ in range(100):
        g = _random_expr(rng, coords)
        a = DiffForm.one_form(BUNDLE5, {c: _random_expr(rng, coords) for c in coords})
        b = DiffForm.one_form(BUNDLE5, {c: _random_expr(rng, coords) for c in coords})
        d = exterior_derivative
        failures += not d(d(DiffForm.function(BUNDLE5, g))).is_zero()
        failures += not d(d(a)).is_zero()
        failures += d(wedge(a, b)) != wedge(d(a), b) - wedge(a, d(b))
    for _ in range(100):
        a, b, c = (_random_rational(rng, (X, Y, P)) for _ in range(3))
        failures += a * (b + c) != a * b + a * c
        failures += (a * b) * c != a * (b * c)
        failures += a.diff(X).diff(Y) != a.diff(Y).diff(X)
    record(acceptance_log, 12, failures == 0, t, 30, f"{failures} failures over 200 random cases")


def _corpus_point(rng):
    # stay well away from x = 0 and y = 0 so the stencil never meets a pole
    def value():
        v = Fraction(rng.randint(5, 25), rng.randint(2, 9))
        return v if rng.random() < 0.5 else -v

    return value(), value(), value()


def test_criterion_13_numerical_oracle(acceptance_log):
    t = time.perf_counter()
    rng = random.Random(13)
    beta = const_symbol("b")
    failures = []
    corpus = LINEARIZABLE + tuple(NOT_LINEARIZABLE)
    for text in corpus:
        o = OdeInput.parse(text)
        I, I1 = relative_invariant(o), closed_form_I1(o)
        b_value = Fraction(rng.randint(1, 9), rng.randint(1, 5))
        # the oracle evaluates f through sympy, independently of the engine
        fn = exact_lambda(to_sympy(text).subs(sb, sympy.Rational(b_value)), (sx, sy, sp))
        for _ in range(20):
            point = _corpus_point(rng)
            env = {X: point[0], Y: point[1], P: point[2], beta: b_value}
            fd_I, fd_I1 = fd_invariants(fn, point)
            if not (close(I.evaluate(env), fd_I) and close(I1.evaluate(env), fd_I1)):
                failures.append((text, point))
    ok = not failures
    record(acceptance_log, 13, ok, t, None, f"{len(corpus)} inputs x 20 points, failures {failures[:2]}")


def _cli(*args, env=None):
    return subprocess.run(
        [sys.executable, "-m", "affode", *args],
        capture_output=True,
        text=True,
        env=dict(os.environ, **(env or {})),
        check=False,
    )


def test_criterion_14_cli_contract(acceptance_log):
    t = time.perf_counter()
    timing = re.compile(r'"timing_ms": [0-9.]+')
    golden_ok = True
    for f, name in (("y'^3 + x", "analyze_cubic_plus_x.json"), ("0", "analyze_zero.json")):
        out = _cli("analyze", "--f", f, "--json")
        golden_ok &= out.returncode == 0
        golden_ok &= timing.sub('"timing_ms": 0', out.stdout) == (GOLDEN / name).read_text()
    codes = {
        0: _cli("curvature", "--f", "0").returncode,
        2: _cli("analyze", "--f", "x +* 2").returncode,
        4: _cli("curvature", "--f", "y").returncode,
        5: _cli("analyze", "--f", "x^3*y'^5", env={"AFFODE_MAX_DEGREE": "4"}).returncode,
    }
    # exit code 3 is exercised in-process by forcing an internal failure
    from affode import cli

    saved = cli.classify
    try:
        cli.classify = lambda _ode: (_ for _ in ()).throw(AssertionError("forced"))
        codes[3] = cli.main(["analyze", "--f", "0"])
    finally:
        cli.classify = saved
    codes_ok = all(k == v for k, v in codes.items())
    record(acceptance_log, 14, golden_ok and codes_ok, t, None, f"goldens {golden_ok}, exit codes {codes}")

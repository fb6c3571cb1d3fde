"""Deterministic text rendering of expressions.

Terms are printed in descending graded-lexicographic order under the fixed
symbol order, factors in symbol order, and ``p`` is spelled ``y'``.  For
expressions free of jets the output parses back to the same expression.
"""

from __future__ import annotations

from typing import Dict

from .expr import _BITS, _MASK, Expr, _by_id, _mono_key, _support, _symbol_order


def _render_monomial(m: int, order) -> str:
    parts = []
    for i in order:
        e = (m >> (_BITS * (i + 1))) & _MASK
        if e == 1:
            parts.append(str(_by_id(i)))
        elif e:
            parts.append(f"{_by_id(i)}^{e}")
    return "*".join(parts)


def _terms(poly: Dict[int, int]):
    order = _symbol_order(_support(poly))
    keyed = sorted(poly.items(), key=lambda kv: _mono_key(kv[0], order), reverse=True)
    out = []
    for m, c in keyed:
        mono = _render_monomial(m, order)
        sign = "-" if c < 0 else "+"
        c = abs(c)
        if not mono:
            body = str(c)
        elif c == 1:
            body = mono
        else:
            body = f"{c}*{mono}"
        out.append((sign, body))
    return out


def render_poly(poly: Dict[int, int]) -> str:
    if not poly:
        return "0"
    terms = _terms(poly)
    first_sign, first = terms[0]
    text = ("-" if first_sign == "-" else "") + first
    for sign, body in terms[1:]:
        text += f" {sign} {body}"
    return text


def render_expr(e: Expr) -> str:
    num = render_poly(e.num)
    if e.den == {0: 1}:
        return num
    den = render_poly(e.den)
    if len(e.num) > 1:
        num = f"({num})"
    simple_den = len(e.den) == 1 and (
        next(iter(e.den)) == 0 or (e.den[next(iter(e.den))] == 1 and "*" not in den)
    )
    if not simple_den:
        den = f"({den})"
    return f"{num}/{den}"

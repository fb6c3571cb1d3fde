"""Exact multivariate rational functions over Q.

An :class:`Expr` is a reduced fraction ``num/den`` of integer polynomials in
:class:`Symbol` variables.  Polynomials are plain dicts mapping a packed
monomial (a Python int) to an integer coefficient.  The lowest 16-bit field of
a packed monomial holds its total degree; the field at ``16*(id+1)`` holds the
exponent of the symbol with intern id ``id``.  Multiplying monomials is then a
single integer addition.

Symbols of kind ``jet`` stand for partial derivatives of a function of
``(x, y, p)``; differentiating them with respect to a base coordinate bumps the
corresponding index.  The function named ``f`` is the right-hand side of the
ODE; other names are auxiliary unknown functions.
"""

from __future__ import annotations

import math
import os
import threading
from contextvars import ContextVar
from fractions import Fraction
from functools import reduce
from operator import or_
from typing import Dict, Iterable, Mapping, Optional, Tuple, Union

__all__ = [
    "Symbol",
    "Expr",
    "QuadExtExpr",
    "ExprError",
    "DivisionByZero",
    "PoleError",
    "UnboundSymbol",
    "DegreeLimitExceeded",
    "degree_cap",
    "X",
    "Y",
    "P",
    "U1",
    "U2",
    "U3",
    "T1",
    "V1",
    "V3",
    "fjet",
    "const",
    "partial",
    "instantiate_jets",
    "eval_rational",
]

_BITS = 16
_MASK = (1 << _BITS) - 1

Poly = Dict[int, int]


class ExprError(ArithmeticError):
    """Base class for expression-level errors."""


class DivisionByZero(ExprError, ZeroDivisionError):
    pass


class PoleError(ExprError):
    """Denominator vanishes at an evaluation point."""


class UnboundSymbol(ExprError, KeyError):
    pass


class DegreeLimitExceeded(ExprError):
    """A polynomial grew past the configured total-degree cap."""


def _default_cap() -> int:
    try:
        return int(os.environ.get("AFFODE_MAX_DEGREE", "64"))
    except ValueError:
        return 64


# Expression-swell guard; the CLI rebinds it from AFFODE_MAX_DEGREE.
degree_cap: ContextVar[int] = ContextVar("degree_cap", default=_default_cap())


# ---------------------------------------------------------------------------
# Symbols

_KIND_RANK = {"base": 0, "bundle": 1, "group": 2, "jet": 3, "const": 4, "aux": 5}
_BASE_ORDER = {"x": 0, "y": 1, "p": 2}
_BUNDLE_ORDER = {"u1": 0, "u2": 1, "u3": 2, "t1": 3}
_GROUP_ORDER = {"v1": 0, "v3": 1}


class Symbol:
    """An interned variable.

    Kinds are ``base`` (x, y, p), ``bundle`` (u1, u2, u3, t1), ``group``
    (v1, v3), ``jet`` (derivative ``d_x^i d_y^j d_p^k`` of the function
    ``fname``) and ``const`` (free constants).  Jets of functions other than
    ``f`` sort after everything else.
    """

    __slots__ = ("kind", "name", "indices", "fname", "id", "shift", "sort_key")

    _intern: Dict[tuple, "Symbol"] = {}
    _by_id: list = []
    _lock = threading.Lock()

    def __new__(cls, kind: str, name: str = "", indices: Tuple[int, ...] = (), fname: str = ""):
        key = (kind, name, tuple(indices), fname)
        sym = cls._intern.get(key)
        if sym is not None:
            return sym
        with cls._lock:
            sym = cls._intern.get(key)
            if sym is not None:
                return sym
            sym = object.__new__(cls)
            sym.kind = kind
            sym.name = name
            sym.indices = tuple(indices)
            sym.fname = fname
            sym.id = len(cls._by_id)
            sym.shift = _BITS * (sym.id + 1)
            if kind == "base":
                sub = (_BASE_ORDER[name],)
            elif kind == "bundle":
                sub = (_BUNDLE_ORDER[name],)
            elif kind == "group":
                sub = (_GROUP_ORDER[name],)
            else:
                sub = ()
            rank = _KIND_RANK["aux" if kind == "jet" and fname != "f" else kind]
            sym.sort_key = (rank, fname, sub, sym.indices, name)
            cls._by_id.append(sym)
            cls._intern[key] = sym
            return sym

    def __reduce__(self):
        return (Symbol, (self.kind, self.name, self.indices, self.fname))

    def __repr__(self):
        return f"Symbol({self})"

    def __str__(self):
        if self.kind == "jet":
            i, j, k = self.indices
            if i == j == k == 0:
                return self.fname
            return f"{self.fname}_" + "x" * i + "y" * j + "y'" * k
        if self.name == "p":
            return "y'"
        return self.name

    def __lt__(self, other: "Symbol") -> bool:
        return self.sort_key < other.sort_key

    @property
    def is_jet(self) -> bool:
        return self.kind == "jet"

    def bump(self, coord: "Symbol") -> Optional["Symbol"]:
        """The jet obtained by differentiating this jet along ``coord``."""
        if self.kind != "jet" or coord.kind != "base":
            return None
        i, j, k = self.indices
        if coord.name == "x":
            i += 1
        elif coord.name == "y":
            j += 1
        else:
            k += 1
        return Symbol("jet", indices=(i, j, k), fname=self.fname)


def _by_id(i: int) -> Symbol:
    return Symbol._by_id[i]


X = Symbol("base", "x")
Y = Symbol("base", "y")
P = Symbol("base", "p")
U1 = Symbol("bundle", "u1")
U2 = Symbol("bundle", "u2")
U3 = Symbol("bundle", "u3")
T1 = Symbol("bundle", "t1")
V1 = Symbol("group", "v1")
V3 = Symbol("group", "v3")
BASE_COORDS = (X, Y, P)


def fjet_symbol(i: int = 0, j: int = 0, k: int = 0, fname: str = "f") -> Symbol:
    return Symbol("jet", indices=(i, j, k), fname=fname)


def const_symbol(name: str) -> Symbol:
    return Symbol("const", name)


# ---------------------------------------------------------------------------
# Packed-monomial polynomial kernel


def _mono(sym: Symbol, e: int = 1) -> int:
    return (e << sym.shift) + e


def _support(poly: Poly) -> Tuple[int, ...]:
    """Intern ids of the variables occurring in ``poly``."""
    if not poly:
        return ()
    acc = reduce(or_, poly) >> _BITS
    out = []
    i = 0
    while acc:
        if acc & _MASK:
            out.append(i)
        acc >>= _BITS
        i += 1
    return tuple(out)


def _exps(m: int, ids: Iterable[int]) -> Tuple[int, ...]:
    return tuple((m >> (_BITS * (i + 1))) & _MASK for i in ids)


def _check_degree(poly: Poly) -> Poly:
    cap = degree_cap.get()
    for m in poly:
        if (m & _MASK) > cap:
            raise DegreeLimitExceeded(f"total degree {m & _MASK} exceeds cap {cap}")
    return poly


def _padd(a: Poly, b: Poly, sign: int = 1) -> Poly:
    if len(a) < len(b) and sign == 1:
        a, b = b, a
    out = dict(a)
    get = out.get
    for m, c in b.items():
        v = get(m, 0) + sign * c
        if v:
            out[m] = v
        else:
            out.pop(m, None)
    return out


def _pmul(a: Poly, b: Poly) -> Poly:
    if len(a) == 1:
        (ma, ca), = a.items()
        if ma == 0 and ca == 1:
            return dict(b)
        return _check_degree({ma + m: ca * c for m, c in b.items()})
    if len(b) == 1:
        return _pmul(b, a)
    out: Poly = {}
    get = out.get
    for ma, ca in a.items():
        for mb, cb in b.items():
            m = ma + mb
            out[m] = get(m, 0) + ca * cb
    return _check_degree({m: c for m, c in out.items() if c})


def _pscale(a: Poly, c: int) -> Poly:
    if c == 1:
        return a
    return {m: v * c for m, v in a.items()}


def _content(poly: Poly) -> int:
    return math.gcd(*poly.values())


def _mono_key(m: int, order: Tuple[int, ...]) -> tuple:
    return (m & _MASK,) + _exps(m, order)


def _symbol_order(ids: Iterable[int]) -> Tuple[int, ...]:
    return tuple(sorted(ids, key=lambda i: _by_id(i).sort_key))


def _leading(poly: Poly) -> Tuple[int, int]:
    if len(poly) == 1:
        return next(iter(poly.items()))
    order = _symbol_order(_support(poly))
    m = max(poly, key=lambda k: _mono_key(k, order))
    return m, poly[m]


def _pgcd_sympy(a: Poly, b: Poly) -> Tuple[Poly, Poly, Poly]:
    """Polynomial gcd and cofactors of two integer polynomials."""
    from sympy import ZZ
    from sympy.polys.orderings import lex
    from sympy.polys.rings import PolyRing

    ids = tuple(sorted(set(_support(a)) | set(_support(b))))
    ring = PolyRing([f"g{i}" for i in ids], ZZ, lex)
    pa = ring.from_dict({_exps(m, ids): c for m, c in a.items()})
    pb = ring.from_dict({_exps(m, ids): c for m, c in b.items()})
    h, ca, cb = pa.cofactors(pb)
    shifts = [_BITS * (i + 1) for i in ids]

    def back(q) -> Poly:
        out = {}
        for exps, c in q.items():
            m = sum(exps)
            for e, s in zip(exps, shifts):
                m += e << s
            out[m] = int(c)
        return out

    return back(h), back(ca), back(cb)


_ONE_POLY: Poly = {0: 1}


def _canonical(num: Poly, den: Poly) -> Tuple[Poly, Poly]:
    if not den:
        raise DivisionByZero("division by zero")
    if not num:
        return {}, _ONE_POLY
    if len(den) == 1 and 0 in den:
        c = den[0]
        if c == 1:
            return num, den
        g = math.gcd(_content(num), c)
        if c < 0:
            g = -g
        return ({m: v // g for m, v in num.items()}, {0: c // g})
    g = math.gcd(_content(num), _content(den))
    if g != 1:
        num = {m: v // g for m, v in num.items()}
        den = {m: v // g for m, v in den.items()}
    # strip common monomial content over the variables of the denominator
    dids = _support(den)
    common = 0
    for i in dids:
        s = _BITS * (i + 1)
        e = min(min((m >> s) & _MASK for m in den), min((m >> s) & _MASK for m in num))
        if e:
            common += (e << s) + e
    if common:
        num = {m - common: v for m, v in num.items()}
        den = {m - common: v for m, v in den.items()}
    if len(den) > 1:
        # strip the denominator's own monomial content before the general gcd
        dcont = 0
        for i in _support(den):
            s = _BITS * (i + 1)
            e = min((m >> s) & _MASK for m in den)
            if e:
                dcont += (e << s) + e
        core = {m - dcont: v for m, v in den.items()} if dcont else den
        if len(core) > 1 and len(num) >= 1:
            h, cn, cd = _pgcd_sympy(num, den)
            if len(h) > 1 or (0 not in h):
                num, den = cn, cd
            elif h[0] not in (1, -1):
                num, den = cn, cd
    _, lc = _leading(den)
    if lc < 0:
        num = {m: -v for m, v in num.items()}
        den = {m: -v for m, v in den.items()}
    return num, den


# ---------------------------------------------------------------------------
# Expr

Number = Union[int, Fraction]


class Expr:
    """Canonical rational function ``num/den`` with integer coefficients.

    Instances are immutable.  Equality is equality of canonical forms, so
    ``a == b`` decides whether two rational functions are identical.
    """

    __slots__ = ("num", "den", "_hash")

    def __init__(self, value: Union[Number, "Expr", Symbol] = 0):
        if isinstance(value, Expr):
            num, den = value.num, value.den
        elif isinstance(value, Symbol):
            num, den = {_mono(value): 1}, _ONE_POLY
        elif isinstance(value, int):
            num, den = ({0: value} if value else {}), _ONE_POLY
        elif isinstance(value, Fraction):
            if value.numerator == 0:
                num, den = {}, _ONE_POLY
            else:
                num, den = {0: value.numerator}, {0: value.denominator}
        else:
            raise TypeError(f"cannot build Expr from {type(value).__name__}")
        self.num = num
        self.den = den
        self._hash = None

    @classmethod
    def _raw(cls, num: Poly, den: Poly) -> "Expr":
        e = object.__new__(cls)
        e.num = num
        e.den = den
        e._hash = None
        return e

    @classmethod
    def fraction(cls, num: Poly, den: Poly) -> "Expr":
        n, d = _canonical(num, den)
        return cls._raw(n, d)

    @classmethod
    def from_poly(cls, poly: Poly) -> "Expr":
        return cls._raw(poly, _ONE_POLY)

    # -- predicates -------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.num

    def __bool__(self) -> bool:
        return bool(self.num)

    def is_polynomial(self) -> bool:
        """True when the denominator is a constant (a polynomial over Q)."""
        return all(m == 0 for m in self.den)

    def is_constant(self) -> bool:
        return all(m == 0 for m in self.num) and all(m == 0 for m in self.den)

    def as_fraction(self) -> Fraction:
        if not self.is_constant():
            raise ValueError(f"{self} is not a constant")
        return Fraction(self.num.get(0, 0), self.den[0])

    def free_symbols(self) -> frozenset:
        ids = set(_support(self.num)) | set(_support(self.den))
        return frozenset(_by_id(i) for i in ids)

    def degree(self) -> int:
        """max(total degree of numerator, total degree of denominator)."""
        d = max((m & _MASK for m in self.num), default=0)
        return max(d, max(m & _MASK for m in self.den))

    def size(self) -> int:
        return len(self.num) + len(self.den)

    def degree_in(self, sym: Symbol) -> int:
        s = sym.shift
        return max(((m >> s) & _MASK for m in self.num), default=0)

    # -- comparison -------------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, Expr):
            if isinstance(other, (int, Fraction, Symbol)):
                other = Expr(other)
            else:
                return NotImplemented
        return self.num == other.num and self.den == other.den

    def __ne__(self, other) -> bool:
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((frozenset(self.num.items()), frozenset(self.den.items())))
        return self._hash

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other) -> "Expr":
        other = _coerce(other)
        if other is None:
            return NotImplemented
        if not other.num:
            return self
        if not self.num:
            return other
        if self.den == other.den:
            num = _padd(self.num, other.num)
            if self.den == _ONE_POLY:
                return Expr._raw(num, _ONE_POLY)
            return Expr.fraction(num, self.den)
        num = _padd(_pmul(self.num, other.den), _pmul(other.num, self.den))
        return Expr.fraction(num, _pmul(self.den, other.den))

    __radd__ = __add__

    def __neg__(self) -> "Expr":
        return Expr._raw({m: -c for m, c in self.num.items()}, self.den)

    def __pos__(self) -> "Expr":
        return self

    def __sub__(self, other) -> "Expr":
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "Expr":
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other) -> "Expr":
        other = _coerce(other)
        if other is None:
            return NotImplemented
        if not self.num or not other.num:
            return ZERO
        if self.den == _ONE_POLY and other.den == _ONE_POLY:
            return Expr._raw(_pmul(self.num, other.num), _ONE_POLY)
        return Expr.fraction(_pmul(self.num, other.num), _pmul(self.den, other.den))

    __rmul__ = __mul__

    def inverse(self) -> "Expr":
        if not self.num:
            raise DivisionByZero("division by zero expression")
        return Expr.fraction(self.den, self.num)

    def __truediv__(self, other) -> "Expr":
        other = _coerce(other)
        if other is None:
            return NotImplemented
        if not other.num:
            raise DivisionByZero("division by zero expression")
        return Expr.fraction(_pmul(self.num, other.den), _pmul(self.den, other.num))

    def __rtruediv__(self, other) -> "Expr":
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return other / self

    def __pow__(self, n: int) -> "Expr":
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        result = ONE
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # -- calculus ---------------------------------------------------------

    def diff(self, sym: Symbol) -> "Expr":
        """Partial derivative; jets of functions of (x, y, p) bump their indices."""
        dn = _pdiff(self.num, sym)
        if self.den == _ONE_POLY:
            return Expr._raw(dn, _ONE_POLY)
        dd = _pdiff(self.den, sym)
        if not dd:
            if not dn:
                return ZERO
            return Expr.fraction(dn, self.den)
        num = _padd(_pmul(dn, self.den), _pmul(self.num, dd), -1)
        return Expr.fraction(num, _pmul(self.den, self.den))

    def subs(self, mapping: Mapping[Symbol, "Expr"]) -> "Expr":
        """Simultaneous substitution of symbols by expressions."""
        if not mapping:
            return self
        mp = {s.id: _coerce(v) for s, v in mapping.items()}
        num = _psubs(self.num, mp)
        if self.den == _ONE_POLY:
            return num
        return num / _psubs(self.den, mp)

    def coefficients_in(self, sym: Symbol) -> Dict[int, "Expr"]:
        """Coefficients of ``self`` viewed as a polynomial in ``sym``.

        The denominator must not involve ``sym``.
        """
        s = sym.shift
        if any((m >> s) & _MASK for m in self.den):
            raise ValueError(f"{sym} occurs in the denominator")
        parts: Dict[int, Poly] = {}
        for m, c in self.num.items():
            e = (m >> s) & _MASK
            parts.setdefault(e, {})[m - (e << s) - e] = c
        return {e: Expr.fraction(p, self.den) for e, p in sorted(parts.items())}

    def evaluate(self, point: Mapping[Symbol, Number]) -> Fraction:
        """Exact value at a rational point."""
        ids = set(_support(self.num)) | set(_support(self.den))
        vals = {}
        for i in ids:
            sym = _by_id(i)
            if sym not in point:
                raise UnboundSymbol(str(sym))
            vals[i] = Fraction(point[sym])
        d = _peval(self.den, vals)
        if d == 0:
            raise PoleError(f"pole of {self} at {_fmt_point(point)}")
        return _peval(self.num, vals) / d

    # -- rendering --------------------------------------------------------

    def __str__(self) -> str:
        from .render import render_expr

        return render_expr(self)

    def __repr__(self) -> str:
        return f"Expr({str(self)!r})"


def _fmt_point(point) -> str:
    return "{" + ", ".join(f"{k}: {v}" for k, v in sorted(point.items(), key=lambda kv: kv[0].sort_key)) + "}"


def _coerce(v) -> Optional[Expr]:
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, Fraction, Symbol)):
        return Expr(v)
    return None


ZERO = Expr(0)
ONE = Expr(1)


def _pdiff(poly: Poly, sym: Symbol) -> Poly:
    out: Poly = {}
    get = out.get
    base = sym.kind == "base"
    for i in _support(poly):
        v = _by_id(i)
        if v is sym:
            delta = -(1 << v.shift) - 1
        elif base and v.kind == "jet":
            b = v.bump(sym)
            delta = (1 << b.shift) - (1 << v.shift)
        else:
            continue
        s = v.shift
        for m, c in poly.items():
            e = (m >> s) & _MASK
            if e:
                nm = m + delta
                out[nm] = get(nm, 0) + c * e
    return {m: c for m, c in out.items() if c}


def _psubs(poly: Poly, mp: Dict[int, Expr]) -> Expr:
    ids = [i for i in _support(poly) if i in mp]
    if not ids:
        return Expr.from_poly(dict(poly))
    groups: Dict[Tuple[int, ...], Poly] = {}
    for m, c in poly.items():
        exps = _exps(m, ids)
        rest = m
        for i, e in zip(ids, exps):
            rest -= (e << (_BITS * (i + 1))) + e
        groups.setdefault(exps, {})[rest] = c
    powers: Dict[Tuple[int, int], Expr] = {}

    def power(i: int, e: int) -> Expr:
        key = (i, e)
        if key not in powers:
            powers[key] = mp[i] ** e
        return powers[key]

    total = ZERO
    for exps, rest in groups.items():
        term = Expr.from_poly(rest)
        for i, e in zip(ids, exps):
            if e:
                term = term * power(i, e)
        total = total + term
    return total


def _peval(poly: Poly, vals: Dict[int, Fraction]) -> Fraction:
    ids = tuple(vals)
    total = Fraction(0)
    for m, c in poly.items():
        t = Fraction(c)
        for i, e in zip(ids, _exps(m, ids)):
            if e:
                t *= vals[i] ** e
        total += t
    return total


# ---------------------------------------------------------------------------
# Convenience constructors and the module-level operations


def sym(s: Symbol) -> Expr:
    return Expr(s)


def fjet(i: int = 0, j: int = 0, k: int = 0, fname: str = "f") -> Expr:
    """The formal jet ``d_x^i d_y^j d_p^k fname`` as an expression."""
    return Expr(fjet_symbol(i, j, k, fname))


def const(name: str) -> Expr:
    return Expr(const_symbol(name))


def partial(e: Expr, s: Symbol) -> Expr:
    return e.diff(s)


def jet_derivative(f: Expr, i: int, j: int, k: int, cache: Optional[dict] = None) -> Expr:
    """``d_x^i d_y^j d_p^k f`` with memoisation of the intermediate jets."""
    if cache is None:
        cache = {}
    key = (i, j, k)
    if key in cache:
        return cache[key]
    if key == (0, 0, 0):
        r = f
    elif k:
        r = jet_derivative(f, i, j, k - 1, cache).diff(P)
    elif j:
        r = jet_derivative(f, i, j - 1, k, cache).diff(Y)
    else:
        r = jet_derivative(f, i - 1, j, k, cache).diff(X)
    cache[key] = r
    return r


def instantiate_jets(e: Expr, f_concrete: Expr, fname: str = "f", cache: Optional[dict] = None) -> Expr:
    """Replace every jet of ``fname`` in ``e`` by the derivative of ``f_concrete``."""
    jets = [s for s in e.free_symbols() if s.kind == "jet" and s.fname == fname]
    if not jets:
        return e
    if cache is None:
        cache = {}
    return e.subs({s: jet_derivative(f_concrete, *s.indices, cache=cache) for s in jets})


def eval_rational(e: Expr, point: Mapping[Symbol, Number]) -> Fraction:
    return e.evaluate(point)


# ---------------------------------------------------------------------------
# Quadratic extension


def _exact_sqrt_const(e: Expr) -> Optional[Expr]:
    if not e.is_constant():
        return None
    q = e.as_fraction()
    if q <= 0:
        return None
    rn, rd = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if rn * rn == q.numerator and rd * rd == q.denominator:
        return Expr(Fraction(rn, rd))
    return None


class QuadExtExpr:
    """``a + b*r`` with ``r**2 = radicand``.

    When the radicand is the square of a positive rational constant, ``r`` is
    identified with the positive root and ``b`` is folded into ``a``.
    """

    __slots__ = ("a", "b", "radicand")

    def __init__(self, a, b, radicand: Expr):
        a, b, radicand = _coerce(a), _coerce(b), _coerce(radicand)
        root = _exact_sqrt_const(radicand)
        if root is not None and b:
            a, b = a + b * root, ZERO
        self.a = a
        self.b = b
        self.radicand = radicand

    @classmethod
    def root(cls, radicand: Expr) -> "QuadExtExpr":
        return cls(ZERO, ONE, radicand)

    def _lift(self, other) -> "QuadExtExpr":
        if isinstance(other, QuadExtExpr):
            if other.radicand != self.radicand:
                raise ValueError("radicand mismatch")
            return other
        return QuadExtExpr(_coerce(other), ZERO, self.radicand)

    def is_zero(self) -> bool:
        return self.a.is_zero() and self.b.is_zero()

    def __eq__(self, other) -> bool:
        if not isinstance(other, (QuadExtExpr, Expr, int, Fraction)):
            return NotImplemented
        o = self._lift(other)
        return self.a == o.a and self.b == o.b

    def __hash__(self):
        return hash((self.a, self.b, self.radicand))

    def __add__(self, other) -> "QuadExtExpr":
        o = self._lift(other)
        return QuadExtExpr(self.a + o.a, self.b + o.b, self.radicand)

    __radd__ = __add__

    def __neg__(self) -> "QuadExtExpr":
        return QuadExtExpr(-self.a, -self.b, self.radicand)

    def __sub__(self, other) -> "QuadExtExpr":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "QuadExtExpr":
        return self._lift(other) - self

    def __mul__(self, other) -> "QuadExtExpr":
        o = self._lift(other)
        a = self.a * o.a + self.b * o.b * self.radicand
        b = self.a * o.b + self.b * o.a
        return QuadExtExpr(a, b, self.radicand)

    __rmul__ = __mul__

    def norm(self) -> Expr:
        return self.a * self.a - self.b * self.b * self.radicand

    def inverse(self) -> "QuadExtExpr":
        n = self.norm()
        if n.is_zero():
            raise DivisionByZero(f"{self} is not invertible")
        return QuadExtExpr(self.a / n, -self.b / n, self.radicand)

    def __truediv__(self, other) -> "QuadExtExpr":
        return self * self._lift(other).inverse()

    def __rtruediv__(self, other) -> "QuadExtExpr":
        return self._lift(other) * self.inverse()

    def __pow__(self, n: int) -> "QuadExtExpr":
        if n < 0:
            return self.inverse() ** (-n)
        out = QuadExtExpr(ONE, ZERO, self.radicand)
        for _ in range(n):
            out = out * self
        return out

    def __str__(self) -> str:
        if self.b.is_zero():
            return str(self.a)
        return f"({self.a}) + ({self.b})*r  [r^2 = {self.radicand}]"

    __repr__ = __str__

"""Exterior algebra over a coordinate chart with :class:`Expr` coefficients."""

from __future__ import annotations

from functools import lru_cache
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .expr import P, U1, U2, U3, X, Y, ZERO, Expr, Symbol
from .linalg import SingularMatrix, inverse

__all__ = [
    "Chart",
    "BASE3",
    "BUNDLE6",
    "BUNDLE5",
    "DiffForm",
    "MatrixForm",
    "CoframeBasis",
    "CoframeNotInvertible",
    "ChartMismatch",
    "wedge",
    "exterior_derivative",
    "express_in_coframe",
    "matrix_curvature",
]


class ChartMismatch(ValueError):
    pass


class CoframeNotInvertible(ArithmeticError):
    pass


class Chart(tuple):
    """Ordered tuple of distinct coordinate symbols."""

    def __new__(cls, coords: Iterable[Symbol]):
        coords = tuple(coords)
        if len(set(coords)) != len(coords):
            raise ValueError("chart coordinates must be distinct")
        return super().__new__(cls, coords)

    def __repr__(self):
        return "Chart(" + ", ".join(str(c) for c in self) + ")"


BASE3 = Chart((X, Y, P))
BUNDLE6 = Chart((X, Y, P, U1, U2, U3))
BUNDLE5 = Chart((X, Y, P, U1, U3))

Index = Tuple[int, ...]


def _merge_sign(a: Index, b: Index) -> Tuple[int, Optional[Index]]:
    """Sign and sorted index of ``dI_a ^ dI_b``; ``(0, None)`` on repeats."""
    if set(a) & set(b):
        return 0, None
    inv = 0
    for i in a:
        for j in b:
            if i > j:
                inv += 1
    return (-1 if inv & 1 else 1), tuple(sorted(a + b))


class DiffForm:
    """A homogeneous differential form ``sum c_I dx_I`` on ``chart``.

    Only nonzero coefficients are stored, so zero forms of any degree compare
    equal.
    """

    __slots__ = ("chart", "degree", "terms")

    def __init__(self, chart: Chart, degree: int, terms: Optional[Mapping[Index, Expr]] = None):
        self.chart = chart
        self.degree = degree
        self.terms: Dict[Index, Expr] = {}
        if terms:
            for k, v in terms.items():
                if len(k) != degree:
                    raise ValueError(f"index {k} does not have length {degree}")
                if list(k) != sorted(set(k)):
                    raise ValueError(f"index {k} is not strictly increasing")
                if not isinstance(v, Expr):
                    v = Expr(v)
                if v:
                    self.terms[k] = v

    @classmethod
    def _raw(cls, chart, degree, terms) -> "DiffForm":
        f = object.__new__(cls)
        f.chart = chart
        f.degree = degree
        f.terms = terms
        return f

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, chart: Chart, degree: int = 1) -> "DiffForm":
        return cls._raw(chart, degree, {})

    @classmethod
    def function(cls, chart: Chart, e) -> "DiffForm":
        return cls(chart, 0, {(): e})

    @classmethod
    def d_coord(cls, chart: Chart, coord: Symbol) -> "DiffForm":
        return cls._raw(chart, 1, {(chart.index(coord),): Expr(1)})

    @classmethod
    def one_form(cls, chart: Chart, coeffs: Mapping[Symbol, Expr]) -> "DiffForm":
        return cls(chart, 1, {(chart.index(s),): c for s, c in coeffs.items()})

    # -- algebra ------------------------------------------------------------

    def _check(self, other: "DiffForm"):
        if other.chart != self.chart:
            raise ChartMismatch(f"{self.chart!r} vs {other.chart!r}")

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiffForm):
            return NotImplemented
        if not self.terms and not other.terms:
            return True
        return self.chart == other.chart and self.degree == other.degree and self.terms == other.terms

    def __hash__(self):
        return hash((self.chart, self.degree, frozenset(self.terms.items())))

    def __add__(self, other: "DiffForm") -> "DiffForm":
        self._check(other)
        if not other.terms:
            return self
        if not self.terms:
            return other
        if self.degree != other.degree:
            raise ValueError("cannot add forms of different degree")
        out = dict(self.terms)
        for k, v in other.terms.items():
            s = out.get(k)
            s = v if s is None else s + v
            if s:
                out[k] = s
            else:
                out.pop(k, None)
        return DiffForm._raw(self.chart, self.degree, out)

    def __neg__(self) -> "DiffForm":
        return DiffForm._raw(self.chart, self.degree, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other: "DiffForm") -> "DiffForm":
        return self + (-other)

    def scale(self, c) -> "DiffForm":
        c = c if isinstance(c, Expr) else Expr(c)
        if not c:
            return DiffForm.zero(self.chart, self.degree)
        out = {}
        for k, v in self.terms.items():
            w = v * c
            if w:
                out[k] = w
        return DiffForm._raw(self.chart, self.degree, out)

    def __rmul__(self, c) -> "DiffForm":
        return self.scale(c)

    def __mul__(self, c) -> "DiffForm":
        return self.scale(c)

    def __xor__(self, other: "DiffForm") -> "DiffForm":
        return wedge(self, other)

    def coeff(self, *coords: Symbol) -> Expr:
        """Coefficient of ``d c1 ^ d c2 ^ ...`` (with sign for unsorted input)."""
        idx = [self.chart.index(c) for c in coords]
        sign = 1
        for i in range(len(idx)):
            for j in range(i + 1, len(idx)):
                if idx[i] > idx[j]:
                    sign = -sign
                elif idx[i] == idx[j]:
                    return ZERO
        v = self.terms.get(tuple(sorted(idx)), ZERO)
        return v if sign == 1 else -v

    def map_coefficients(self, fn) -> "DiffForm":
        out = {}
        for k, v in self.terms.items():
            w = fn(v)
            if w:
                out[k] = w
        return DiffForm._raw(self.chart, self.degree, out)

    def subs(self, mapping: Mapping[Symbol, Expr]) -> "DiffForm":
        """Substitute into coefficients only (no pullback of differentials)."""
        return self.map_coefficients(lambda v: v.subs(mapping))

    def restrict(self, coords: Sequence[Symbol]) -> "DiffForm":
        """Keep only the terms built from the differentials of ``coords``."""
        keep = {self.chart.index(c) for c in coords}
        return DiffForm._raw(
            self.chart, self.degree, {k: v for k, v in self.terms.items() if set(k) <= keep}
        )

    def on_chart(self, chart: Chart) -> "DiffForm":
        """The same form regarded on a chart containing this one's coordinates."""
        pos = [chart.index(c) for c in self.chart]
        out = {}
        for k, v in self.terms.items():
            new = [pos[i] for i in k]
            s = 1
            for i in range(len(new)):
                for j in range(i + 1, len(new)):
                    if new[i] > new[j]:
                        s = -s
            out[tuple(sorted(new))] = v if s == 1 else -v
        return DiffForm._raw(chart, self.degree, out)

    def pullback(self, mapping: Mapping[Symbol, Expr]) -> "DiffForm":
        """Pull back along ``c -> mapping[c]`` for the listed chart coordinates.

        Unlisted coordinates map to themselves.  Base coordinates may not be
        remapped because jet symbols depend on them implicitly.
        """
        for c in mapping:
            if c.kind == "base":
                raise ValueError("pullback may not move base coordinates")
        images: List[DiffForm] = []
        for c in self.chart:
            if c in mapping:
                images.append(exterior_derivative(DiffForm.function(self.chart, mapping[c])))
            else:
                images.append(DiffForm.d_coord(self.chart, c))
        out = DiffForm.zero(self.chart, self.degree)
        for k, v in self.terms.items():
            term = DiffForm.function(self.chart, v.subs(mapping))
            for i in k:
                term = wedge(term, images[i])
            out = out + term
        return out

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for k in sorted(self.terms):
            basis = "^".join(f"d{self.chart[i]}" for i in k)
            parts.append(f"({self.terms[k]})" + (f"*{basis}" if basis else ""))
        return " + ".join(parts)

    __repr__ = __str__


def wedge(a: DiffForm, b: DiffForm) -> DiffForm:
    if a.chart != b.chart:
        raise ChartMismatch(f"{a.chart!r} vs {b.chart!r}")
    out: Dict[Index, Expr] = {}
    for ka, va in a.terms.items():
        for kb, vb in b.terms.items():
            sign, idx = _merge_sign(ka, kb)
            if not sign:
                continue
            t = va * vb
            if sign < 0:
                t = -t
            s = out.get(idx)
            out[idx] = t if s is None else s + t
    return DiffForm._raw(a.chart, a.degree + b.degree, {k: v for k, v in out.items() if v})


def exterior_derivative(a: DiffForm) -> DiffForm:
    """``d`` with respect to the chart coordinates (jets follow x, y, p)."""
    out: Dict[Index, Expr] = {}
    for k, v in a.terms.items():
        for ci, c in enumerate(a.chart):
            if ci in k:
                continue
            dv = v.diff(c)
            if not dv:
                continue
            before = sum(1 for i in k if i < ci)
            idx = tuple(sorted(k + (ci,)))
            if before & 1:
                dv = -dv
            s = out.get(idx)
            out[idx] = dv if s is None else s + dv
    return DiffForm._raw(a.chart, a.degree + 1, {k: v for k, v in out.items() if v})


class CoframeBasis:
    """An ordered coframe of 1-forms on a chart, with cached inversion."""

    def __init__(self, chart: Chart, forms: Sequence[DiffForm], names: Optional[Sequence[str]] = None):
        if len(forms) != len(chart):
            raise ValueError("a coframe needs one 1-form per coordinate")
        for f in forms:
            if f.chart != chart or (f.terms and f.degree != 1):
                raise ValueError("coframe entries must be 1-forms on the chart")
        self.chart = chart
        self.forms = list(forms)
        self.names = list(names) if names else [f"b{i + 1}" for i in range(len(forms))]
        self._dual: Optional[List[DiffForm]] = None
        self._det: Optional[Expr] = None

    def matrix(self) -> List[List[Expr]]:
        n = len(self.chart)
        return [[f.terms.get((j,), ZERO) for j in range(n)] for f in self.forms]

    def _invert(self):
        if self._dual is None:
            try:
                inv, det = inverse(self.matrix())
            except SingularMatrix as exc:
                raise CoframeNotInvertible(str(exc)) from exc
            n = len(self.chart)
            # d(coord_j) written in the basis: sum_i inv[j][i] * basis_i
            self._dual = [
                DiffForm._raw(_basis_chart(n), 1, {(i,): inv[j][i] for i in range(n) if inv[j][i]})
                for j in range(n)
            ]
            self._det = det
        return self._dual

    def determinant(self) -> Expr:
        self._invert()
        return self._det

    def express(self, a: DiffForm) -> Dict[Index, Expr]:
        """Coefficients of ``a`` on wedge monomials of this basis (sorted indices)."""
        if a.chart != self.chart and a.terms:
            raise ChartMismatch(f"{a.chart!r} vs {self.chart!r}")
        dual = self._invert()
        n = len(self.chart)
        bchart = _basis_chart(n)
        total: Dict[Index, Expr] = {}
        for k, v in a.terms.items():
            term = DiffForm._raw(bchart, 0, {(): v})
            for i in k:
                term = wedge(term, dual[i])
            for idx, c in term.terms.items():
                s = total.get(idx)
                total[idx] = c if s is None else s + c
        return {k: v for k, v in total.items() if v}

    def rebuild(self, coeffs: Mapping[Index, Expr], degree: int) -> DiffForm:
        """``sum coeff * (basis wedge monomial)`` as a form on the chart."""
        out = DiffForm.zero(self.chart, degree)
        for idx, c in coeffs.items():
            term = DiffForm.function(self.chart, c)
            for i in idx:
                term = wedge(term, self.forms[i])
            out = out + term
        return out

    def monomial_name(self, idx: Index) -> str:
        return "^".join(self.names[i] for i in idx) if idx else "1"

    def coefficient(self, a: DiffForm, *names: str) -> Expr:
        """Coefficient of a named wedge monomial, e.g. ``("theta3", "theta1")``."""
        idx = [self.names.index(n) for n in names]
        sign = 1
        for i in range(len(idx)):
            for j in range(i + 1, len(idx)):
                if idx[i] > idx[j]:
                    sign = -sign
        v = self.express(a).get(tuple(sorted(idx)), ZERO)
        return v if sign == 1 else -v


@lru_cache(maxsize=None)
def _basis_chart(n: int) -> Chart:
    # abstract chart whose "coordinates" are the basis positions
    return Chart(tuple(f"e{i}" for i in range(n)))


def express_in_coframe(a: DiffForm, basis: CoframeBasis) -> Dict[Index, Expr]:
    if a.degree not in (0, 1, 2, 3) and a.terms:
        raise ValueError("unsupported degree")
    return basis.express(a)


class MatrixForm:
    """Square matrix of forms of one degree."""

    __slots__ = ("entries",)

    def __init__(self, entries: Sequence[Sequence[DiffForm]]):
        self.entries = [list(row) for row in entries]

    @property
    def chart(self) -> Chart:
        return self.entries[0][0].chart

    @property
    def size(self) -> int:
        return len(self.entries)

    def __getitem__(self, ij) -> DiffForm:
        i, j = ij
        return self.entries[i][j]

    def map(self, fn) -> "MatrixForm":
        return MatrixForm([[fn(e) for e in row] for row in self.entries])

    def d(self) -> "MatrixForm":
        return self.map(exterior_derivative)

    def __add__(self, other: "MatrixForm") -> "MatrixForm":
        n = self.size
        return MatrixForm([[self.entries[i][j] + other.entries[i][j] for j in range(n)] for i in range(n)])

    def __sub__(self, other: "MatrixForm") -> "MatrixForm":
        n = self.size
        return MatrixForm([[self.entries[i][j] - other.entries[i][j] for j in range(n)] for i in range(n)])

    def wedge(self, other: "MatrixForm") -> "MatrixForm":
        n = self.size
        out = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = DiffForm.zero(self.chart, 0)
                for k in range(n):
                    acc = acc + wedge(self.entries[i][k], other.entries[k][j])
                row.append(acc)
            out.append(row)
        return MatrixForm(out)

    def conjugate(self, left: Sequence[Sequence[Expr]], right: Sequence[Sequence[Expr]]) -> "MatrixForm":
        """``left @ self @ right`` with function-valued matrices."""
        n = self.size
        chart = self.chart
        mid = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = DiffForm.zero(chart, 0)
                for k in range(n):
                    if left[i][k]:
                        acc = acc + self.entries[k][j].scale(left[i][k])
                row.append(acc)
            mid.append(row)
        out = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = DiffForm.zero(chart, 0)
                for k in range(n):
                    if right[k][j]:
                        acc = acc + mid[i][k].scale(right[k][j])
                row.append(acc)
            out.append(row)
        return MatrixForm(out)

    def is_asl_shaped(self) -> bool:
        """First row zero and trace-free lower 2x2 block."""
        first_row_zero = all(e.is_zero() for e in self.entries[0])
        return first_row_zero and (self.entries[1][1] + self.entries[2][2]).is_zero()

    def is_zero(self) -> bool:
        return all(e.is_zero() for row in self.entries for e in row)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MatrixForm):
            return NotImplemented
        return all(a == b for ra, rb in zip(self.entries, other.entries) for a, b in zip(ra, rb))

    def __str__(self) -> str:
        return "\n".join("[" + ", ".join(str(e) for e in row) + "]" for row in self.entries)


def matrix_curvature(omega: MatrixForm) -> MatrixForm:
    """``d omega + omega ^ omega``."""
    return omega.d() + omega.wedge(omega)

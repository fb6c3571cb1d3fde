"""Fraction-free elimination over the field of rational functions."""

from __future__ import annotations

from typing import List, Optional, Sequence, Tuple

from .expr import ONE, ZERO, Expr

Matrix = List[List[Expr]]


class SingularMatrix(ArithmeticError):
    pass


def _weight(e: Expr) -> Tuple[int, int]:
    return (e.degree(), e.size())


def _pick_pivot(a: Matrix, col: int, rows: Sequence[int]) -> Optional[int]:
    best = None
    for r in rows:
        e = a[r][col]
        if e and (best is None or _weight(e) < _weight(a[best][col])):
            best = r
    return best


def bareiss(a: Matrix) -> Tuple[Matrix, List[Tuple[int, int]], int]:
    """Fraction-free forward elimination with lowest-degree pivoting.

    Returns the eliminated copy, the list of ``(row, col)`` pivot positions,
    and the sign of the row permutation.  After elimination the last pivot
    equals the determinant (up to that sign) for square nonsingular input.
    """
    a = [list(row) for row in a]
    nrows = len(a)
    ncols = len(a[0]) if a else 0
    pivots: List[Tuple[int, int]] = []
    prev = ONE
    sign = 1
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        piv = _pick_pivot(a, c, range(r, nrows))
        if piv is None:
            continue
        if piv != r:
            a[r], a[piv] = a[piv], a[r]
            sign = -sign
        pv = a[r][c]
        for i in range(r + 1, nrows):
            lead = a[i][c]
            row_i = a[i]
            row_r = a[r]
            for j in range(c + 1, ncols):
                v = pv * row_i[j] - lead * row_r[j] if lead else pv * row_i[j]
                row_i[j] = v / prev if prev != ONE else v
            row_i[c] = ZERO
        pivots.append((r, c))
        prev = pv
        r += 1
    return a, pivots, sign


def rank(a: Matrix) -> int:
    return len(bareiss(a)[1]) if a else 0


def determinant(a: Matrix) -> Expr:
    n = len(a)
    if n == 0:
        return ONE
    red, pivots, sign = bareiss(a)
    if len(pivots) < n:
        return ZERO
    d = red[n - 1][n - 1]
    return d if sign == 1 else -d


def inverse(a: Matrix) -> Tuple[Matrix, Expr]:
    """Inverse via fraction-free Gauss-Jordan on ``[a | I]``; also returns det."""
    n = len(a)
    aug = [list(a[i]) + [ONE if i == j else ZERO for j in range(n)] for i in range(n)]
    prev = ONE
    sign = 1
    for k in range(n):
        piv = _pick_pivot(aug, k, range(k, n))
        if piv is None:
            raise SingularMatrix("matrix is not invertible over the rational-function field")
        if piv != k:
            aug[k], aug[piv] = aug[piv], aug[k]
            sign = -sign
        pv = aug[k][k]
        row_k = aug[k]
        for i in range(n):
            if i == k:
                continue
            row_i = aug[i]
            lead = row_i[k]
            for j in range(2 * n):
                if j == k:
                    continue
                v = pv * row_i[j] - lead * row_k[j] if lead else pv * row_i[j]
                row_i[j] = v / prev if prev != ONE else v
            row_i[k] = ZERO
        # rows above k were scaled by pv without the previous pivot division
        prev = pv
    det = prev
    inv = [[aug[i][n + j] / aug[i][i] for j in range(n)] for i in range(n)]
    return inv, (det if sign == 1 else -det)


def matmul(a: Matrix, b: Matrix) -> Matrix:
    return [
        [sum((a[i][k] * b[k][j] for k in range(len(b))), ZERO) for j in range(len(b[0]))]
        for i in range(len(a))
    ]

"""Recursive-descent parser for ODE right-hand sides.

Grammar::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := '-' factor | atom ('^' ['-'] integer)?
    atom   := number | ident | "y'" | '(' expr ')'
    number := integer ('/' integer)?
    ident  := letter (letter|digit)*

``y'`` and ``p`` both denote the first-derivative coordinate.  ``x``, ``y``,
``u1``, ``u2``, ``u3``, ``t1``, ``v1``, ``v3`` are reserved; ``f`` is the
formal right-hand side; any other identifier is a free constant.
"""

from __future__ import annotations

from fractions import Fraction

from .expr import (
    P,
    T1,
    U1,
    U2,
    U3,
    V1,
    V3,
    X,
    Y,
    DivisionByZero,
    Expr,
    const_symbol,
    fjet_symbol,
)

__all__ = ["ParseError", "parse_expr"]

_RESERVED = {
    "x": X,
    "y": Y,
    "p": P,
    "u1": U1,
    "u2": U2,
    "u3": U3,
    "t1": T1,
    "v1": V1,
    "v3": V3,
    "f": fjet_symbol(0, 0, 0),
}


class ParseError(ValueError):
    """Syntax error; ``offset`` is the byte offset into the UTF-8 input."""

    def __init__(self, message: str, text: str, pos: int):
        self.offset = len(text[:pos].encode("utf-8"))
        self.text = text
        super().__init__(f"{message} at byte offset {self.offset}")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message: str, pos=None):
        raise ParseError(message, self.text, self.pos if pos is None else pos)

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self, ch: str) -> bool:
        if self.peek() == ch:
            self.pos += 1
            return True
        return False

    def integer(self) -> int:
        self.skip()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if start == self.pos:
            self.error("expected integer")
        return int(self.text[start:self.pos])

    def parse(self) -> Expr:
        if not self.peek():
            self.error("empty expression")
        e = self.expr()
        if self.peek():
            self.error(f"unexpected {self.peek()!r}")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while True:
            if self.take("+"):
                e = e + self.term()
            elif self.take("-"):
                e = e - self.term()
            else:
                return e

    def term(self) -> Expr:
        e = self.factor()
        while True:
            if self.take("*"):
                e = e * self.factor()
            elif self.peek() == "/":
                at = self.pos
                self.pos += 1
                rhs = self.factor()
                if rhs.is_zero():
                    self.error("division by zero", at)
                e = e / rhs
            else:
                return e

    def factor(self) -> Expr:
        # unary minus binds looser than '^': -y'^2 is -(y'^2)
        if self.take("-"):
            return -self.factor()
        base = self.atom()
        if self.take("^"):
            neg = self.take("-")
            n = self.integer()
            if neg:
                if base.is_zero():
                    self.error("zero raised to a negative power")
                n = -n
            return base ** n
        return base

    def atom(self) -> Expr:
        ch = self.peek()
        if not ch:
            self.error("unexpected end of input")
        if ch == "(":
            self.pos += 1
            e = self.expr()
            if not self.take(")"):
                self.error("expected ')'")
            return e
        if ch.isdigit():
            n = self.integer()
            save = self.pos
            if self.take("/"):
                self.skip()
                if self.pos < len(self.text) and self.text[self.pos].isdigit():
                    at = self.pos
                    d = self.integer()
                    if d == 0:
                        self.error("division by zero", at)
                    return Expr(Fraction(n, d))
                self.pos = save
            return Expr(n)
        if ch.isalpha():
            start = self.pos
            while self.pos < len(self.text) and (self.text[self.pos].isalnum() or self.text[self.pos] == "_"):
                self.pos += 1
            name = self.text[start:self.pos]
            if name == "y" and self.pos < len(self.text) and self.text[self.pos] == "'":
                self.pos += 1
                return Expr(P)
            if name in _RESERVED:
                return Expr(_RESERVED[name])
            return Expr(const_symbol(name))
        self.error(f"unexpected {ch!r}")


def parse_expr(text: str) -> Expr:
    """Parse ``text`` into a canonical :class:`Expr`.

    >>> str(parse_expr("(x+y)*(x-y)"))
    'x^2 - y^2'
    """
    try:
        return _Parser(text).parse()
    except DivisionByZero as exc:
        raise ParseError(str(exc), text, len(text)) from exc

"""Text form of engine expressions.

Grammar shared by the CLI and the report writer::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := ('-' | '+')* atom ('^' INT)?
    atom   := INT | NAME | '(' expr ')'

Names: field variables ``u1..`` (order-0), jets ``u1_x``, ``u1_xx``,
``u1_x3`` (k >= 3 written ``_x{k}``), odd cotangent variables ``p1``,
``p1_x``, ..., nonlocal potentials ``r1`` (never differentiated in the
text form), parameters ``c1..``.  Exponents are non-negative integers.
Division is only by scalar (jet- and odd-free) subexpressions.

``parse`` returns a DiffPoly; printing is the exact inverse, so
``parse(format_diffpoly(e)) == e``.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .errors import ExpressionError
from .jets import DiffPoly
from .rational import Poly, RatFunc

_TOKEN_RE = re.compile(r"(\d+)|([a-z][a-zA-Z0-9_]*)|(\*|/|\+|-|\^|\(|\))")
_NAME_RE = re.compile(r"^([uprc])([1-9]\d*)(?:_(xx?|x\d+))?$")


class _Token:
    __slots__ = ("kind", "value", "line", "col")

    def __init__(self, kind, value, line, col):
        self.kind = kind
        self.value = value
        self.line = line
        self.col = col


def _tokenize(text: str, line: int = 1):
    tokens = []
    pos = 0
    n = len(text)
    while True:
        while pos < n and text[pos].isspace():
            pos += 1
        if pos >= n:
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExpressionError(f"unexpected character {text[pos]!r}", line, pos + 1)
        col = pos + 1
        if m.group(1):
            tokens.append(_Token("int", int(m.group(1)), line, col))
        elif m.group(2):
            tokens.append(_Token("name", m.group(2), line, col))
        else:
            tokens.append(_Token("op", m.group(3), line, col))
        pos = m.end()
    tokens.append(_Token("end", None, line, n + 1))
    return tokens


def _name_to_value(tok: _Token) -> DiffPoly:
    m = _NAME_RE.match(tok.value)
    if m is None:
        raise ExpressionError(f"unknown name {tok.value!r}", tok.line, tok.col)
    letter, index, suffix = m.group(1), int(m.group(2)), m.group(3)
    if suffix is None:
        xorder = 0
    elif suffix == "x":
        xorder = 1
    elif suffix == "xx":
        xorder = 2
    else:
        xorder = int(suffix[1:])
        if xorder < 3:
            hint = {0: "no suffix", 1: "_x", 2: "_xx"}[xorder]
            raise ExpressionError(
                f"order-{xorder} uses {hint}, the _x{{k}} form starts at k = 3",
                tok.line, tok.col)
    if letter == "u":
        return DiffPoly.jet(index, xorder)
    if letter == "p":
        return DiffPoly.odd_p(index, xorder)
    if letter == "r":
        if xorder:
            raise ExpressionError("nonlocal variables r{a} carry no explicit jets",
                                  tok.line, tok.col)
        return DiffPoly.odd_r(index)
    if xorder:
        raise ExpressionError("parameters carry no jets", tok.line, tok.col)
    return DiffPoly.from_scalar(RatFunc.var(-index))


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op):
        tok = self.next()
        if tok.kind != "op" or tok.value != op:
            raise ExpressionError(f"expected {op!r}", tok.line, tok.col)

    def parse_expr(self) -> DiffPoly:
        value = self.parse_term()
        while True:
            tok = self.peek()
            if tok.kind == "op" and tok.value in "+-":
                self.next()
                rhs = self.parse_term()
                value = value + rhs if tok.value == "+" else value - rhs
            else:
                return value

    def parse_term(self) -> DiffPoly:
        value = self.parse_factor()
        while True:
            tok = self.peek()
            if tok.kind == "op" and tok.value in "*/":
                self.next()
                rhs = self.parse_factor()
                if tok.value == "*":
                    value = value * rhs
                else:
                    if not rhs.is_scalar:
                        raise ExpressionError(
                            "division only by jet- and odd-free expressions",
                            tok.line, tok.col)
                    divisor = rhs.scalar_value()
                    if divisor.is_zero:
                        raise ExpressionError("division by zero", tok.line, tok.col)
                    value = value.scalar_mul(RatFunc.one() / divisor)
            else:
                return value

    def parse_factor(self) -> DiffPoly:
        sign = 1
        while True:
            tok = self.peek()
            if tok.kind == "op" and tok.value in "+-":
                self.next()
                if tok.value == "-":
                    sign = -sign
            else:
                break
        value = self.parse_atom()
        tok = self.peek()
        if tok.kind == "op" and tok.value == "^":
            self.next()
            etok = self.next()
            if etok.kind != "int":
                raise ExpressionError("exponent must be a non-negative integer",
                                      etok.line, etok.col)
            value = value ** etok.value
        return -value if sign < 0 else value

    def parse_atom(self) -> DiffPoly:
        tok = self.next()
        if tok.kind == "int":
            return DiffPoly.from_scalar(Fraction(tok.value))
        if tok.kind == "name":
            return _name_to_value(tok)
        if tok.kind == "op" and tok.value == "(":
            value = self.parse_expr()
            self.expect_op(")")
            return value
        raise ExpressionError("expected a number, name or parenthesis",
                              tok.line, tok.col)


def parse(text: str, line: int = 1) -> DiffPoly:
    """Parse an expression into a DiffPoly."""
    parser = _Parser(_tokenize(text, line))
    value = parser.parse_expr()
    tok = parser.peek()
    if tok.kind != "end":
        raise ExpressionError(f"trailing input {tok.value!r}", tok.line, tok.col)
    return value


def parse_scalar(text: str, line: int = 1) -> RatFunc:
    """Parse an expression that must be jet- and odd-free."""
    value = parse(text, line)
    if not value.is_scalar:
        raise ExpressionError("expected a scalar (no jets or odd variables)", line, 1)
    return value.scalar_value()


# -- printing ------------------------------------------------------------------


def format_poly(p: Poly) -> str:
    return str(p)


def _poly_body(p: Poly) -> str:
    """Polynomial rendered so it can be glued with '*': parenthesize sums."""
    if len(p.terms) > 1:
        return f"({p})"
    ((m, c),) = p.terms.items()
    if c < 0:
        return f"({p})"
    return str(p)


def format_ratfunc(r: RatFunc) -> str:
    if r.is_poly:
        return str(r.num)
    return f"{_poly_body(r.num)}/{_poly_body(r.den)}"


def _coeff_factor(r: RatFunc) -> str:
    """Coefficient rendered as a single '*'-joinable factor."""
    if r.is_poly:
        p = r.num
        if len(p.terms) > 1:
            return f"({p})"
        ((m, c),) = p.terms.items()
        if c < 0 or (c.denominator != 1 and m):
            # keep e.g. (2/3*u1) unambiguous as one factor
            return str(p) if not m else f"({p})"
        return str(p)
    return f"({_poly_body(r.num)}/{_poly_body(r.den)})"


def format_diffpoly(a: DiffPoly) -> str:
    if a.is_zero:
        return "0"
    chunks = []
    for m, coeff in a.sorted_terms():
        factors = []
        for jv, e in m.even:
            factors.append(jv.name() if e == 1 else f"{jv.name()}^{e}")
        if m.odd is not None:
            factors.append(m.odd.name())
        sign = "-" if coeff.leading_sign() < 0 else "+"
        if sign == "-":
            coeff = -coeff
        if not factors:
            body = _coeff_factor(coeff)
        elif coeff == RatFunc.one():
            body = "*".join(factors)
        else:
            body = "*".join([_coeff_factor(coeff)] + factors)
        chunks.append((sign, body))
    first_sign, first_body = chunks[0]
    out = ("-" if first_sign == "-" else "") + first_body
    for sign, body in chunks[1:]:
        out += f" {sign} {body}"
    return out

"""Text format for rational and theta expressions.

Grammar (whitespace ignored)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom (("^" | "**") ["-"] INT)?
    atom   := NUMBER | VAR | "th" "(" expr ")" | "(" expr ")"
    VAR    := l[i,s] | zf[j,t] | t1 | t2 | hbar | identifier

``hbar`` expands to t1 + t2.  ``th(...)`` needs an affine-linear argument
with integer coefficients.  Printing with ``str`` and parsing again is the
identity up to canonical form.
"""
from __future__ import annotations

import re
from fractions import Fraction

from .errors import ParseError
from .symbolic import EMPTY_SPACE, RationalExpr, VarSpace
from .theta import AffineForm, ThetaExpr

__all__ = ["parse_expression", "parse_rational", "parse_theta", "format_expression"]

_TOKEN = re.compile(
    r"""\s*(?:
        (?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)
      | (?P<var>(?:l|zf)\[\s*[^,\[\]\s]+\s*,\s*\d+\s*\]|[A-Za-z_][A-Za-z0-9_]*)
      | (?P<op>\*\*|[-+*/^()])
    )""",
    re.VERBOSE,
)


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            stripped = len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError("unexpected character", text, pos + stripped)
        kind = m.lastgroup
        value = m.group(kind)
        if kind == "var":
            value = re.sub(r"\s+", "", value)
        out.append((kind, value, m.start(kind)))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, space: VarSpace):
        self.text = text
        self.space = space
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.take()
        if val != value:
            raise ParseError(f"expected {value!r}", self.text, pos)

    def error(self, message, pos=None):
        if pos is None:
            pos = self.peek()[2]
        return ParseError(message, self.text, pos)

    def parse(self):
        if self.peek()[0] == "end":
            raise self.error("empty expression")
        value = self.expr()
        if self.peek()[0] != "end":
            raise self.error(f"unexpected token {self.peek()[1]!r}")
        return value

    def expr(self):
        value = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            value = _combine(value, rhs, op)
        return value

    def term(self):
        value = self.unary()
        while self.peek()[1] in ("*", "/"):
            _, op, pos = self.take()
            rhs = self.unary()
            if op == "*":
                value = _combine(value, rhs, "*")
            else:
                value = self.divide(value, rhs, pos)
        return value

    def divide(self, lhs, rhs, pos):
        if rhs.is_zero:
            raise self.error("division by zero", pos)
        if isinstance(rhs, ThetaExpr):
            if len(rhs) != 1:
                raise self.error("division by a sum of theta terms is not supported", pos)
            return ThetaExpr.coerce(lhs) * rhs.inverse()
        if isinstance(lhs, ThetaExpr):
            return lhs * ThetaExpr.from_rational(rhs.inverse())
        return lhs / rhs

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return -self.unary()
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] in ("^", "**"):
            self.take()
            sign = 1
            if self.peek()[1] == "-":
                self.take()
                sign = -1
            kind, val, pos = self.take()
            if kind != "num" or not val.isdigit():
                raise ParseError("exponent must be an integer", self.text, pos)
            n = sign * int(val)
            if isinstance(base, ThetaExpr) and n < 0 and len(base) != 1:
                raise ParseError("negative power of a sum of theta terms", self.text, pos)
            if isinstance(base, RationalExpr) and n < 0 and base.is_zero:
                raise ParseError("division by zero", self.text, pos)
            return base**n
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return RationalExpr.const(Fraction(val), self.space)
        if kind == "var":
            if val == "th":
                self.expect("(")
                inner = self.expr()
                self.expect(")")
                if isinstance(inner, ThetaExpr):
                    raise ParseError("theta of a theta expression", self.text, pos)
                try:
                    form = AffineForm.from_rational(inner)
                except ValueError as exc:
                    raise ParseError(f"theta argument must be affine-linear with integer coefficients ({exc})", self.text, pos) from None
                return ThetaExpr.theta(form, 1, self.space)
            return RationalExpr.var(val, self.space)
        if val == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        if kind == "end":
            raise ParseError("unexpected end of expression", self.text, pos)
        raise ParseError(f"unexpected token {val!r}", self.text, pos)


def _combine(a, b, op):
    if isinstance(a, ThetaExpr) or isinstance(b, ThetaExpr):
        a, b = ThetaExpr.coerce(a), ThetaExpr.coerce(b)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    return a * b


def parse_expression(text: str, space: VarSpace = EMPTY_SPACE):
    """Parse to a RationalExpr, or a ThetaExpr when ``th(...)`` occurs."""
    try:
        return _Parser(text, space).parse()
    except ParseError:
        raise
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(str(exc), text, 0) from exc


def parse_rational(text: str, space: VarSpace = EMPTY_SPACE) -> RationalExpr:
    value = parse_expression(text, space)
    if isinstance(value, ThetaExpr):
        raise ParseError("theta factors are not allowed in a rational expression", text, text.find("th"))
    return value


def parse_theta(text: str, space: VarSpace = EMPTY_SPACE) -> ThetaExpr:
    return ThetaExpr.coerce(parse_expression(text, space))


def format_expression(e) -> str:
    return str(e)

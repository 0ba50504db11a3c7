"""Pratt parser for the expression grammar.

Grammar summary: decimal integers (rationals via `/`), parameter symbols,
the field variable `V` with affine powers `V^(2*p+3)`, exponentials
`exp((n+1)*V)`, function atoms with derivative suffixes (`a_t`, `f_xx`,
`F_V`), operators `+ - * / ^` with usual precedence, and parentheses.
Division is restricted to invertible single-term expressions.
"""
from __future__ import annotations

import re
from fractions import Fraction

from .errors import DivisionError, ParseError, UnknownSymbolError
from .expr import (
    AFF_ZERO,
    AffineExponent,
    Context,
    DEFAULT_CONTEXT,
    Expr,
)

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+)|(?P<ident>[A-Za-z][A-Za-z0-9]*(?:_[txV]+)?)"
    r"|(?P<op>[-+*/^()]))"
)

_SUFFIX_RE = re.compile(r"^(?P<base>[A-Za-z][A-Za-z0-9]*)(?:_(?P<suffix>[txV]+))?$")


class _Token:
    __slots__ = ("kind", "value", "pos")

    def __init__(self, kind, value, pos):
        self.kind = kind
        self.value = value
        self.pos = pos


def _tokenize(text: str):
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            bad = pos + len(text[pos:]) - len(stripped)
            raise ParseError(f"unexpected character {stripped[0]!r}", bad)
        if m.group("num") is not None:
            out.append(_Token("num", int(m.group("num")), m.start()))
        elif m.group("ident") is not None:
            out.append(_Token("ident", m.group("ident"), m.start()))
        else:
            out.append(_Token("op", m.group("op"), m.start()))
        pos = m.end()
    out.append(_Token("end", None, len(text)))
    return out


_BINARY_BP = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 30}
_UNARY_BP = 25


class _Parser:
    def __init__(self, tokens, ctx: Context):
        self.tokens = tokens
        self.i = 0
        self.ctx = ctx

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        tok = self.advance()
        if tok.kind != "op" or tok.value != op:
            raise ParseError(f"expected {op!r}", tok.pos)

    def parse(self, min_bp: int = 0) -> Expr:
        lhs = self.parse_prefix()
        while True:
            tok = self.peek()
            if tok.kind != "op" or tok.value not in _BINARY_BP:
                break
            bp = _BINARY_BP[tok.value]
            if bp <= min_bp:
                break
            self.advance()
            if tok.value == "^":
                rhs = self.parse(bp - 1)  # right associative
                lhs = self.apply_power(lhs, rhs, tok.pos)
            else:
                rhs = self.parse(bp)
                if tok.value == "+":
                    lhs = lhs + rhs
                elif tok.value == "-":
                    lhs = lhs - rhs
                elif tok.value == "*":
                    lhs = lhs * rhs
                else:
                    try:
                        lhs = lhs / rhs
                    except DivisionError as exc:
                        raise ParseError(str(exc), tok.pos) from None
        return lhs

    def parse_prefix(self) -> Expr:
        tok = self.advance()
        if tok.kind == "num":
            return Expr.const(tok.value)
        if tok.kind == "op" and tok.value == "-":
            return -self.parse(_UNARY_BP)
        if tok.kind == "op" and tok.value == "+":
            return self.parse(_UNARY_BP)
        if tok.kind == "op" and tok.value == "(":
            inner = self.parse(0)
            self.expect_op(")")
            return inner
        if tok.kind == "ident":
            return self.parse_ident(tok)
        raise ParseError("expected a value", tok.pos)

    def parse_ident(self, tok: _Token) -> Expr:
        name = tok.value
        if name == "exp":
            nxt = self.peek()
            if nxt.kind == "op" and nxt.value == "(":
                self.advance()
                inner = self.parse(0)
                self.expect_op(")")
                return Expr.exp_atom(self._as_exp_argument(inner, tok.pos))
            raise ParseError("exp must be called as exp(...)", tok.pos)
        if name == "V":
            return Expr.vpower(AffineExponent.const(1))
        if name in ("t", "x"):
            return Expr.generator(name)
        m = _SUFFIX_RE.match(name)
        base = m.group("base")
        suffix = m.group("suffix") or ""
        if suffix and base in self.ctx.fns:
            try:
                atom = self.ctx.fn_atom(
                    base,
                    dt=suffix.count("t"),
                    dx=suffix.count("x"),
                    dV=suffix.count("V"),
                )
            except ValueError as exc:
                raise ParseError(str(exc), tok.pos) from None
            return Expr.atom(atom)
        if not suffix:
            if name in self.ctx.params:
                return Expr.generator(name)
            if name in self.ctx.fns:
                return Expr.atom(self.ctx.fn_atom(name))
        raise UnknownSymbolError(f"unknown symbol {name!r}", tok.pos)

    def apply_power(self, base: Expr, exponent: Expr, pos: int) -> Expr:
        if _is_plain_v(base):
            try:
                return Expr.vpower(_as_affine(exponent))
            except ValueError as exc:
                raise ParseError(f"bad V exponent: {exc}", pos) from None
        n = _as_integer(exponent, pos)
        try:
            return base ** n
        except (DivisionError, ValueError) as exc:
            raise ParseError(str(exc), pos) from None

    def _as_exp_argument(self, inner: Expr, pos: int) -> AffineExponent:
        # the argument must be (affine) * V
        for t in inner.terms:
            if t.vpow.key() != (0, 0, 0, 1) or t.fns or not t.expc.is_zero():
                raise ParseError("exp argument must be affine * V", pos)
        total = AFF_ZERO
        for t in inner.terms:
            try:
                total = total + _coeff_to_affine(t)
            except ValueError as exc:
                raise ParseError(f"bad exp argument: {exc}", pos) from None
        if total.is_zero():
            raise ParseError("exp argument must be nonzero", pos)
        return total


def _is_plain_v(e: Expr) -> bool:
    if len(e.terms) != 1:
        return False
    t = e.terms[0]
    return (
        t.vpow.key() == (0, 0, 0, 1)
        and t.expc.is_zero()
        and not t.fns
        and t.coeff.is_const()
        and t.coeff.const_value() == 1
    )


def _coeff_to_affine(t) -> AffineExponent:
    c = t.coeff
    if not c.den.is_const():
        raise ValueError("exponent coefficients must be polynomial")
    out = AFF_ZERO
    for mono, coef in c.num.terms.items():
        if not mono:
            out = out + AffineExponent.const(coef)
        elif len(mono) == 1 and mono[0][1] == 1 and mono[0][0] in ("p", "k", "n"):
            name = mono[0][0]
            out = out + AffineExponent.of(
                cp=coef if name == "p" else 0,
                ck=coef if name == "k" else 0,
                cn=coef if name == "n" else 0,
            )
        else:
            raise ValueError(f"non-affine exponent part {mono}")
    return out


def _as_affine(e: Expr) -> AffineExponent:
    if e.is_zero():
        return AFF_ZERO
    if len(e.terms) != 1:
        # a sum of plain coefficient terms canonicalizes to one term,
        # so anything else carries atoms or V powers
        raise ValueError("exponent must be an affine coefficient expression")
    t = e.terms[0]
    if not t.vpow.is_zero() or not t.expc.is_zero() or t.fns:
        raise ValueError("exponent must be an affine coefficient expression")
    return _coeff_to_affine(t)


def _as_integer(e: Expr, pos: int) -> int:
    if e.is_zero():
        return 0
    if len(e.terms) != 1:
        raise ParseError("power must be an integer", pos)
    t = e.terms[0]
    if not t.vpow.is_zero() or not t.expc.is_zero() or t.fns or not t.coeff.is_const():
        raise ParseError("power must be an integer", pos)
    v = t.coeff.const_value()
    if v.denominator != 1:
        raise ParseError("power must be an integer", pos)
    return int(v)


def parse(text: str, ctx: Context = DEFAULT_CONTEXT) -> Expr:
    """Parse canonical expression text; parse(print(e)) == e for canonical e."""
    tokens = _tokenize(text)
    parser = _Parser(tokens, ctx)
    out = parser.parse(0)
    tok = parser.peek()
    if tok.kind != "end":
        raise ParseError("unexpected trailing input", tok.pos)
    return out


def parse_affine(text: str, ctx: Context = DEFAULT_CONTEXT) -> AffineExponent:
    """Parse an affine exponent such as '2p+3' or '2*p+3'."""
    normalized = re.sub(r"(\d)\s*([pkn])\b", r"\1*\2", text)
    e = parse(normalized, ctx)
    return _as_affine(e)


def parse_fraction(text: str) -> Fraction:
    return Fraction(text)

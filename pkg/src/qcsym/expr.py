"""Canonical symbolic expressions for the symmetry-classification term language.

An expression is a canonical sum of terms; every term is

    coeff(t, x, params) * V^(affine exponent) * exp(affine * V) * product of
    unknown-function atoms with derivative indices.

Affine exponents live over the three exponent parameters p, k, n.  Everything
is immutable; all operations return new canonical values.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import DivisionError
from .poly import CoeffFrac, F_ONE, F_ZERO, Poly

EXPONENT_PARAMS = ("p", "k", "n")


@dataclass(frozen=True, slots=True)
class AffineExponent:
    """Exponent of the form cp*p + ck*k + cn*n + c0 with rational coefficients."""

    cp: Fraction = Fraction(0)
    ck: Fraction = Fraction(0)
    cn: Fraction = Fraction(0)
    c0: Fraction = Fraction(0)

    @classmethod
    def const(cls, c) -> "AffineExponent":
        return cls(c0=Fraction(c))

    @classmethod
    def of(cls, cp=0, ck=0, cn=0, c0=0) -> "AffineExponent":
        return cls(Fraction(cp), Fraction(ck), Fraction(cn), Fraction(c0))

    def __add__(self, other: "AffineExponent") -> "AffineExponent":
        return AffineExponent(
            self.cp + other.cp, self.ck + other.ck,
            self.cn + other.cn, self.c0 + other.c0,
        )

    def __sub__(self, other: "AffineExponent") -> "AffineExponent":
        return AffineExponent(
            self.cp - other.cp, self.ck - other.ck,
            self.cn - other.cn, self.c0 - other.c0,
        )

    def __neg__(self) -> "AffineExponent":
        return AffineExponent(-self.cp, -self.ck, -self.cn, -self.c0)

    def scale(self, c) -> "AffineExponent":
        c = Fraction(c)
        return AffineExponent(self.cp * c, self.ck * c, self.cn * c, self.c0 * c)

    def is_zero(self) -> bool:
        return not (self.cp or self.ck or self.cn or self.c0)

    def is_const(self) -> bool:
        return not (self.cp or self.ck or self.cn)

    def key(self) -> tuple:
        return (self.cp, self.ck, self.cn, self.c0)

    def coeff_of(self, name: str) -> Fraction:
        return {"p": self.cp, "k": self.ck, "n": self.cn}[name]

    def subst(self, name: str, value: "AffineExponent") -> "AffineExponent":
        """Replace an exponent parameter by an affine value."""
        c = self.coeff_of(name)
        if not c:
            return self
        kw = {"cp": self.cp, "ck": self.ck, "cn": self.cn, "c0": self.c0}
        kw[{"p": "cp", "k": "ck", "n": "cn"}[name]] = Fraction(0)
        stripped = AffineExponent(kw["cp"], kw["ck"], kw["cn"], kw["c0"])
        return stripped + value.scale(c)

    def to_poly(self) -> Poly:
        out = Poly.const(self.c0)
        for c, name in ((self.cp, "p"), (self.ck, "k"), (self.cn, "n")):
            if c:
                out = out + Poly.var(name).scale(c)
        return out

    def __str__(self) -> str:
        return affine_text(self)


AFF_ZERO = AffineExponent()
AFF_ONE = AffineExponent.const(1)


def affine_text(a: AffineExponent) -> str:
    parts = []
    for c, name in ((a.cp, "p"), (a.ck, "k"), (a.cn, "n")):
        if not c:
            continue
        body = name if abs(c) == 1 else f"{abs(c)}*{name}"
        parts.append(("-" if c < 0 else "+", body))
    if a.c0 or not parts:
        parts.append(("-" if a.c0 < 0 else "+", str(abs(a.c0))))
    first_sign, first = parts[0]
    text = ("-" if first_sign == "-" else "") + first
    for sign, body in parts[1:]:
        text += sign + body
    return text


@dataclass(frozen=True, slots=True)
class FnAtom:
    """Unknown-function atom with derivative indices and an integer power.

    deps records which of (t, x, V) the function depends on; derivatives in
    other variables are identically zero and such atoms are rejected.
    """

    name: str
    dt: int = 0
    dx: int = 0
    dV: int = 0
    power: int = 1
    deps: tuple = ("t", "x")

    def __post_init__(self):
        if self.power == 0:
            raise ValueError("zero-power function atom")
        if self.dt and "t" not in self.deps:
            raise ValueError(f"{self.name} does not depend on t")
        if self.dx and "x" not in self.deps:
            raise ValueError(f"{self.name} does not depend on x")
        if self.dV and "V" not in self.deps:
            raise ValueError(f"{self.name} does not depend on V")
        if self.power < 0 and self.is_derived():
            raise ValueError(
                f"negative power on derived atom {self.base_text()}"
            )

    def is_derived(self) -> bool:
        return bool(self.dt or self.dx or self.dV)

    def sort_key(self) -> tuple:
        return (self.name, self.dt, self.dx, self.dV)

    def base_text(self) -> str:
        suffix = "t" * self.dt + "x" * self.dx + "V" * self.dV
        return self.name + ("_" + suffix if suffix else "")

    def __str__(self) -> str:
        if self.power == 1:
            return self.base_text()
        if self.power > 0:
            return f"{self.base_text()}^{self.power}"
        return f"{self.base_text()}^({self.power})"


def _merge_fns(fns1, fns2):
    """Merge two sorted atom tuples, summing powers of identical atoms."""
    out = {}
    for a in fns1 + fns2:
        k = a.sort_key()
        cur = out.get(k)
        if cur is None:
            out[k] = a
        else:
            p = cur.power + a.power
            if p:
                out[k] = FnAtom(a.name, a.dt, a.dx, a.dV, p, a.deps)
            else:
                del out[k]
    return tuple(out[k] for k in sorted(out))


class Term:
    """One canonical product: coefficient * V-power * exponential * atoms."""

    __slots__ = ("coeff", "vpow", "expc", "fns", "_sig")

    def __init__(self, coeff: CoeffFrac, vpow: AffineExponent = AFF_ZERO,
                 expc: AffineExponent = AFF_ZERO, fns: tuple = ()):
        self.coeff = coeff
        self.vpow = vpow
        self.expc = expc
        self.fns = fns
        self._sig = (vpow.key(), expc.key(), tuple(a.sort_key() + (a.power,) for a in fns))

    @property
    def signature(self) -> tuple:
        return self._sig

    def __mul__(self, other: "Term") -> "Term":
        return Term(
            self.coeff * other.coeff,
            self.vpow + other.vpow,
            self.expc + other.expc,
            _merge_fns(self.fns, other.fns),
        )

    def scale(self, c: CoeffFrac) -> "Term":
        return Term(self.coeff * c, self.vpow, self.expc, self.fns)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Term)
            and self._sig == other._sig
            and self.coeff == other.coeff
        )

    def __hash__(self) -> int:
        return hash((self._sig, self.coeff))

    def __repr__(self) -> str:
        return f"Term<{term_text(self, lead=True)}>"


class Expr:
    """Canonical sum of terms, ordered descending by term signature."""

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: tuple):
        self.terms = terms
        self._hash = None

    @staticmethod
    def from_terms(terms) -> "Expr":
        merged: dict = {}
        for t in terms:
            if t.coeff.is_zero():
                continue
            cur = merged.get(t._sig)
            if cur is None:
                merged[t._sig] = t
            else:
                c = cur.coeff + t.coeff
                if c.is_zero():
                    del merged[t._sig]
                else:
                    merged[t._sig] = Term(c, t.vpow, t.expc, t.fns)
        ordered = tuple(
            merged[s] for s in sorted(merged, reverse=True)
        )
        return Expr(ordered)

    @staticmethod
    def zero() -> "Expr":
        return E_ZERO

    @staticmethod
    def one() -> "Expr":
        return E_ONE

    @staticmethod
    def const(c) -> "Expr":
        c = Fraction(c)
        if not c:
            return E_ZERO
        return Expr((Term(CoeffFrac.const(c)),))

    @staticmethod
    def from_coeff(c: CoeffFrac) -> "Expr":
        if c.is_zero():
            return E_ZERO
        return Expr((Term(c),))

    @staticmethod
    def vpower(e: AffineExponent) -> "Expr":
        return Expr((Term(F_ONE, vpow=e),))

    @staticmethod
    def exp_atom(c: AffineExponent) -> "Expr":
        return Expr((Term(F_ONE, expc=c),))

    @staticmethod
    def atom(a: FnAtom) -> "Expr":
        return Expr((Term(F_ONE, fns=(a,)),))

    @staticmethod
    def generator(name: str) -> "Expr":
        return Expr((Term(CoeffFrac(Poly.var(name))),))

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        return isinstance(other, Expr) and self.terms == other.terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self.terms)
        return self._hash

    def __add__(self, other: "Expr") -> "Expr":
        if not self.terms:
            return other
        if not other.terms:
            return self
        return Expr.from_terms(self.terms + other.terms)

    def __neg__(self) -> "Expr":
        return Expr(tuple(Term(-t.coeff, t.vpow, t.expc, t.fns) for t in self.terms))

    def __sub__(self, other: "Expr") -> "Expr":
        return self + (-other)

    def __mul__(self, other: "Expr") -> "Expr":
        if not self.terms or not other.terms:
            return E_ZERO
        out = []
        for t1 in self.terms:
            for t2 in other.terms:
                out.append(t1 * t2)
        return Expr.from_terms(out)

    def scale(self, c) -> "Expr":
        c = c if isinstance(c, CoeffFrac) else CoeffFrac.const(c)
        if c.is_zero():
            return E_ZERO
        return Expr(tuple(t.scale(c) for t in self.terms))

    def is_single_term(self) -> bool:
        return len(self.terms) == 1

    def invert(self) -> "Expr":
        """Invert a single-term expression with no derived atoms."""
        if len(self.terms) != 1:
            raise DivisionError(
                f"cannot invert a {len(self.terms)}-term expression"
            )
        t = self.terms[0]
        for a in t.fns:
            if a.is_derived():
                raise DivisionError(
                    f"cannot invert derived atom {a.base_text()}"
                )
        fns = tuple(
            FnAtom(a.name, 0, 0, 0, -a.power, a.deps) for a in t.fns
        )
        return Expr((Term(t.coeff.inverse(), -t.vpow, -t.expc, fns),))

    def __truediv__(self, other: "Expr") -> "Expr":
        return self * other.invert()

    def __pow__(self, n: int) -> "Expr":
        if n < 0:
            return self.invert() ** (-n)
        out = E_ONE
        for _ in range(n):
            out = out * self
        return out

    def lead(self) -> Term:
        return self.terms[0]

    def fn_names(self) -> set:
        out = set()
        for t in self.terms:
            for a in t.fns:
                out.add(a.name)
        return out

    def coeff_gens(self) -> set:
        out = set()
        for t in self.terms:
            out |= t.coeff.gens()
        return out

    def __str__(self) -> str:
        return expr_text(self)

    def __repr__(self) -> str:
        return f"Expr<{expr_text(self)}>"


E_ZERO = Expr(())
E_ONE = Expr((Term(F_ONE),))


# ---------------------------------------------------------------------------
# symbol contexts


class Context:
    """Registry of parameter symbols and unknown-function signatures."""

    RESERVED = {"t", "x", "V", "exp"}

    def __init__(self, params: frozenset, fns: dict):
        self.params = params
        self.fns = fns

    def with_params(self, *names: str) -> "Context":
        for n in names:
            self._check_free(n)
        return Context(self.params | frozenset(names), dict(self.fns))

    def with_fn(self, name: str, deps: tuple) -> "Context":
        self._check_free(name)
        fns = dict(self.fns)
        fns[name] = tuple(deps)
        return Context(self.params, fns)

    def _check_free(self, name: str):
        if name in self.RESERVED or name in self.params or name in self.fns:
            raise ValueError(f"symbol {name!r} already declared")

    def fn_atom(self, name: str, dt=0, dx=0, dV=0, power=1) -> FnAtom:
        return FnAtom(name, dt, dx, dV, power, self.fns[name])


DEFAULT_PARAMS = frozenset(
    {
        "p", "k", "n", "m", "lambda",
        "lambda0", "lambda1", "lambda2", "lambda3",
        "A", "A1", "A2", "A1star", "eps",
    }
)

DEFAULT_FNS = {
    "a": ("t", "x"),
    "f": ("t", "x"),
    "g": ("t", "x"),
    "h": ("t", "x"),
    "alpha": ("t",),
    "beta": ("t",),
    "gamma": ("t",),
    "F": ("V",),
    "xi": ("t", "x", "V"),
    "eta": ("t", "x", "V"),
}

DEFAULT_CONTEXT = Context(DEFAULT_PARAMS, DEFAULT_FNS)


# ---------------------------------------------------------------------------
# canonical printing


def _frac_str(c: Fraction) -> str:
    return str(c)


def poly_text(p: Poly) -> str:
    if p.is_zero():
        return "0"
    gens = sorted(p.gens())

    def keyfun(item):
        m, _ = item
        md = dict(m)
        deg = sum(md.values())
        return (deg, tuple(md.get(g, 0) for g in gens))

    monos = sorted(p.terms.items(), key=keyfun, reverse=True)
    parts = []
    for m, c in monos:
        factors = []
        for name, e in m:
            factors.append(name if e == 1 else f"{name}^{e}")
        mag = abs(c)
        if not factors:
            body = _frac_str(mag)
        elif mag == 1:
            body = "*".join(factors)
        else:
            body = _frac_str(mag) + "*" + "*".join(factors)
        parts.append(("-" if c < 0 else "+", body))
    sign, body = parts[0]
    text = ("-" if sign == "-" else "") + body
    for sign, body in parts[1:]:
        text += sign + body
    return text


def _wrap(text: str) -> str:
    return text if _is_atomic(text) else f"({text})"


def _is_atomic(text: str) -> bool:
    # a product of powers with no top-level + or - is safe unparenthesized
    depth = 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif depth == 0 and ch in "+-" and i > 0:
            return False
        elif depth == 0 and ch == "/":
            return False
    return True


def _top_level_sum(text: str) -> bool:
    # True when the text carries + or - at parenthesis depth zero (a sum,
    # which must be wrapped before entering a product)
    depth = 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif depth == 0 and ch in "+-" and i > 0:
            return True
    return False


def coeff_text(c: CoeffFrac) -> str:
    num = poly_text(c.num)
    if c.den.is_const():
        return num
    return f"{_wrap(num)}/({poly_text(c.den)})"


def _vpow_text(e: AffineExponent) -> str:
    if e.is_const():
        c = e.c0
        if c == 1:
            return "V"
        if c.denominator == 1 and c >= 0:
            return f"V^{c}"
        return f"V^({c})"
    if (e.cp, e.ck, e.cn, e.c0).count(Fraction(0)) == 3:
        # single parameter with unit coefficient prints bare
        for val, name in ((e.cp, "p"), (e.ck, "k"), (e.cn, "n")):
            if val == 1:
                return f"V^{name}"
    return f"V^({affine_text(e)})"


def _exp_text(c: AffineExponent) -> str:
    if c.is_const() and c.c0 == 1:
        return "exp(V)"
    if c.is_const() or (c.cp, c.ck, c.cn).count(Fraction(0)) < 2 or c.c0:
        return f"exp(({affine_text(c)})*V)"
    for val, name in ((c.cp, "p"), (c.ck, "k"), (c.cn, "n")):
        if val == 1:
            return f"exp({name}*V)"
    return f"exp(({affine_text(c)})*V)"


def term_text(t: Term, lead: bool) -> tuple:
    """Return (sign, body) for a term; body omits the sign."""
    sign = "-" if t.coeff.sign() < 0 else "+"
    coeff = t.coeff if t.coeff.sign() >= 0 else -t.coeff
    factors = []
    if not t.vpow.is_zero():
        factors.append(_vpow_text(t.vpow))
    if not t.expc.is_zero():
        factors.append(_exp_text(t.expc))
    for a in t.fns:
        factors.append(str(a))
    is_one = coeff.is_const() and coeff.const_value() == 1
    if not factors:
        body = coeff_text(coeff)
        if _top_level_sum(body):
            body = f"({body})"
    elif is_one:
        body = "*".join(factors)
    else:
        ct = coeff_text(coeff)
        if _top_level_sum(ct):
            ct = f"({ct})"
        body = ct + "*" + "*".join(factors)
    return sign, body


def expr_text(e: Expr) -> str:
    if e.is_zero():
        return "0"
    sign, body = term_text(e.terms[0], lead=True)
    text = ("-" if sign == "-" else "") + body
    for t in e.terms[1:]:
        sign, body = term_text(t, lead=False)
        text += f" {sign} {body}"
    return text

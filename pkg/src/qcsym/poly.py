"""Sparse multivariate polynomials and rational functions over exact rationals.

Generators are named symbols (the lattice variables t, x plus any parameter
symbols).  A monomial is a sorted tuple of (name, exponent) pairs with
positive exponents; a polynomial maps monomials to nonzero Fractions.
Fractions of polynomials are kept reduced by polynomial gcd with a monic
denominator, so equality is structural.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd as _int_gcd

from .errors import PoleError

Mono = tuple  # ((name, exp), ...) sorted by name, all exps > 0

_EMPTY: Mono = ()


def mono_mul(a: Mono, b: Mono) -> Mono:
    if not a:
        return b
    if not b:
        return a
    out = dict(a)
    for name, e in b:
        new = out.get(name, 0) + e
        if new:
            out[name] = new
        else:
            del out[name]
    return tuple(sorted(out.items()))


def mono_divides(a: Mono, b: Mono) -> bool:
    """True when monomial a divides b."""
    bd = dict(b)
    return all(bd.get(name, 0) >= e for name, e in a)


def mono_div(b: Mono, a: Mono) -> Mono:
    out = dict(b)
    for name, e in a:
        new = out[name] - e
        if new:
            out[name] = new
        else:
            del out[name]
    return tuple(sorted(out.items()))


def mono_gcd(a: Mono, b: Mono) -> Mono:
    if not a or not b:
        return _EMPTY
    bd = dict(b)
    out = {}
    for name, e in a:
        m = min(e, bd.get(name, 0))
        if m:
            out[name] = m
    return tuple(sorted(out.items()))


def mono_degree(m: Mono) -> int:
    return sum(e for _, e in m)


class Poly:
    """Immutable sparse polynomial with Fraction coefficients."""

    __slots__ = ("terms", "key", "_hash")

    def __init__(self, terms: dict | None = None):
        t = {}
        if terms:
            for m, c in terms.items():
                if c:
                    t[m] = c if isinstance(c, Fraction) else Fraction(c)
        self.terms = t
        self.key = tuple(sorted(t.items()))
        self._hash = hash(self.key)

    @classmethod
    def const(cls, c) -> "Poly":
        return cls({_EMPTY: Fraction(c)})

    @classmethod
    def var(cls, name: str, exp: int = 1) -> "Poly":
        return cls({((name, exp),): Fraction(1)})

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_const(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and _EMPTY in self.terms)

    def const_value(self) -> Fraction:
        if not self.terms:
            return Fraction(0)
        if not self.is_const():
            raise ValueError(f"not a constant polynomial: {self.terms}")
        return self.terms[_EMPTY]

    def gens(self) -> set:
        out = set()
        for m in self.terms:
            for name, _ in m:
                out.add(name)
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, Poly) and self.key == other.key

    def __hash__(self) -> int:
        return self._hash

    def __add__(self, other: "Poly") -> "Poly":
        if not self.terms:
            return other
        if not other.terms:
            return self
        out = dict(self.terms)
        for m, c in other.terms.items():
            new = out.get(m, 0) + c
            if new:
                out[m] = new
            else:
                out.pop(m, None)
        return Poly(out)

    def __neg__(self) -> "Poly":
        return Poly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other: "Poly") -> "Poly":
        if not self.terms or not other.terms:
            return Poly()
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = mono_mul(m1, m2)
                new = out.get(m, 0) + c1 * c2
                if new:
                    out[m] = new
                else:
                    out.pop(m, None)
        return Poly(out)

    def scale(self, c) -> "Poly":
        c = Fraction(c)
        if not c:
            return Poly()
        return Poly({m: co * c for m, co in self.terms.items()})

    def __pow__(self, n: int) -> "Poly":
        if n < 0:
            raise ValueError("negative polynomial power")
        out = Poly.const(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def deriv(self, gen: str) -> "Poly":
        out: dict = {}
        for m, c in self.terms.items():
            md = dict(m)
            e = md.get(gen, 0)
            if not e:
                continue
            if e == 1:
                del md[gen]
            else:
                md[gen] = e - 1
            mono = tuple(sorted(md.items()))
            new = out.get(mono, 0) + c * e
            if new:
                out[mono] = new
            else:
                out.pop(mono, None)
        return Poly(out)

    def subst(self, gen: str, value) -> "Poly":
        """Substitute a generator by a Fraction or Poly."""
        if gen not in self.gens():
            return self
        vp = value if isinstance(value, Poly) else Poly.const(value)
        out = Poly()
        for m, c in self.terms.items():
            md = dict(m)
            e = md.pop(gen, 0)
            rest = Poly({tuple(sorted(md.items())): c})
            out = out + (rest * vp ** e if e else rest)
        return out

    def degree(self, gen: str) -> int:
        d = 0
        for m in self.terms:
            for name, e in m:
                if name == gen and e > d:
                    d = e
        return d

    def max_degree(self) -> int:
        return max((mono_degree(m) for m in self.terms), default=0)

    def lead_mono(self) -> Mono:
        """Leading monomial under graded lexicographic order."""
        gens = sorted(self.gens())

        def keyfun(m):
            md = dict(m)
            return (mono_degree(m), tuple(md.get(g, 0) for g in gens))

        return max(self.terms, key=keyfun)

    def lead_coeff(self) -> Fraction:
        if not self.terms:
            return Fraction(0)
        return self.terms[self.lead_mono()]

    def content(self) -> Fraction:
        """Positive rational c such that self/c has coprime integer coefficients."""
        if not self.terms:
            return Fraction(1)
        num = 0
        den = 1
        for c in self.terms.values():
            num = _int_gcd(num, abs(c.numerator))
            den = den * c.denominator // _int_gcd(den, c.denominator)
        return Fraction(num, den)

    def mono_content(self) -> Mono:
        it = iter(self.terms)
        try:
            out = next(it)
        except StopIteration:
            return _EMPTY
        for m in it:
            out = mono_gcd(out, m)
            if not out:
                break
        return out

    def div_mono(self, m: Mono) -> "Poly":
        if not m:
            return self
        return Poly({mono_div(mo, m): c for mo, c in self.terms.items()})

    def eval(self, values: dict) -> Fraction:
        """Exact evaluation; every generator must be bound to a Fraction."""
        total = Fraction(0)
        for m, c in self.terms.items():
            v = c
            for name, e in m:
                v *= Fraction(values[name]) ** e
            total += v
        return total

    def eval_float(self, values: dict) -> float:
        total = 0.0
        for m, c in self.terms.items():
            v = float(c)
            for name, e in m:
                v *= values[name] ** e
            total += v
        return total

    def __repr__(self) -> str:
        return f"Poly({dict(self.key)!r})"


P_ZERO = Poly()
P_ONE = Poly.const(1)


def _as_univar(p: Poly, v: str) -> dict:
    """View p as univariate in v with Poly coefficients: degree -> Poly."""
    out: dict = {}
    for m, c in p.terms.items():
        md = dict(m)
        e = md.pop(v, 0)
        mono = tuple(sorted(md.items()))
        coeff = out.setdefault(e, {})
        coeff[mono] = coeff.get(mono, 0) + c
    return {e: Poly(d) for e, d in out.items() if any(d.values())}


def _from_univar(coeffs: dict, v: str) -> Poly:
    out = Poly()
    for e, c in coeffs.items():
        out = out + c * (Poly.var(v, e) if e else P_ONE)
    return out


def _gcd_list(polys) -> Poly:
    g = P_ZERO
    for p in polys:
        g = poly_gcd(g, p)
        if g.is_const() and not g.is_zero():
            return P_ONE
    return g


def _strip_numeric_content(f: dict) -> dict:
    """Divide all coefficient polys by their shared rational content."""
    if not f:
        return f
    num, den = 0, 1
    for p in f.values():
        c = p.content()
        num = _int_gcd(num, c.numerator)
        den = den * c.denominator // _int_gcd(den, c.denominator)
    scale = Fraction(num, den)
    if scale in (0, 1):
        return f
    inv = 1 / scale
    return {e: p.scale(inv) for e, p in f.items()}


def _prem(f: dict, g: dict, v: str) -> dict:
    """Pseudo-remainder of univariate views (degree -> Poly coefficients).

    The result is only needed up to a positive rational factor, so the
    numeric content is stripped every round to stop coefficient blow-up.
    """
    dg = max(g)
    lg = g[dg]
    r = dict(f)
    while r and max(r) >= dg:
        dr = max(r)
        lr = r[dr]
        # r <- lg*r - lr * g * v^(dr-dg)
        new: dict = {}
        for e, c in r.items():
            new[e] = c * lg
        for e, c in g.items():
            shift = e + dr - dg
            new[shift] = new.get(shift, P_ZERO) - lr * c
        r = _strip_numeric_content(
            {e: c for e, c in new.items() if not c.is_zero()}
        )
    return r


def _primitive_univar(f: dict) -> dict:
    if not f:
        return f
    cont = _gcd_list(f.values())
    if not cont.is_zero() and not (cont.is_const() and cont.const_value() == 1):
        f = {e: poly_divexact(c, cont) for e, c in f.items()}
    return _strip_numeric_content(f)


def _normalize_gcd(p: Poly) -> Poly:
    if p.is_zero():
        return p
    c = p.content()
    if p.lead_coeff() < 0:
        c = -c
    if c == 1:
        return p
    return p.scale(Fraction(1) / c)


_SCREEN_POINTS = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def _univar_image(p: Poly, v: str, values: dict) -> dict:
    """Evaluate every generator except v; return degree -> Fraction."""
    out: dict = {}
    for m, c in p.terms.items():
        val = c
        deg = 0
        for name, e in m:
            if name == v:
                deg = e
            else:
                val *= values[name] ** e
        out[deg] = out.get(deg, 0) + val
    return {d: c for d, c in out.items() if c}


def _univar_gcd_degree(f: dict, g: dict) -> int:
    """Degree of gcd of two univariate rational polynomials (Euclid)."""
    while g:
        dg = max(g)
        lg = g[dg]
        r = dict(f)
        while r and max(r) >= dg:
            dr = max(r)
            q = r[dr] / lg
            for e, c in g.items():
                shift = e + dr - dg
                nxt = r.get(shift, 0) - q * c
                if nxt:
                    r[shift] = nxt
                else:
                    r.pop(shift, None)
        f, g = g, r
    return max(f) if f else -1


def _gcd_free_of(a: Poly, b: Poly, v: str, gens) -> bool:
    """Certify that gcd(a, b) does not involve v.

    For an evaluation point r of the other generators: any common divisor G
    satisfies G(v, r) | gcd(a(v, r), b(v, r)), and lc_v(G)(r) != 0 whenever
    lc_v(a)(r) != 0 (the leading coefficients multiply).  So if a keeps its
    v-degree under the evaluation and the univariate image gcd is constant,
    G has v-degree zero.
    """
    da = a.degree(v)
    others = [g for g in gens if g != v]
    for trial in range(3):
        values = {
            g: Fraction(_SCREEN_POINTS[(i + trial * len(others)) % len(_SCREEN_POINTS)])
            for i, g in enumerate(others)
        }
        fa = _univar_image(a, v, values)
        if not fa or max(fa) != da:
            continue  # leading coefficient vanished; try another point
        fb = _univar_image(b, v, values)
        if not fb:
            continue
        if _univar_gcd_degree(fa, fb) == 0:
            return True
        return False  # a genuine common v-factor is plausible; do the work
    return False


def poly_gcd(a: Poly, b: Poly) -> Poly:
    if a.is_zero():
        return _normalize_gcd(b)
    if b.is_zero():
        return _normalize_gcd(a)
    if a.key == b.key:
        return _normalize_gcd(a)
    if a.is_const() or b.is_const():
        return P_ONE
    ma, mb = a.mono_content(), b.mono_content()
    mc = mono_gcd(ma, mb)
    a = a.div_mono(ma)
    b = b.div_mono(mb)
    shared = Poly({mc: Fraction(1)}) if mc else P_ONE
    if a.is_const() or b.is_const():
        return _normalize_gcd(shared)
    gens = sorted(a.gens() | b.gens())
    # screen out generators the gcd provably cannot involve; in the common
    # coprime case this settles everything without a pseudo-remainder chain
    live = []
    for v in gens:
        if a.degree(v) == 0 or b.degree(v) == 0:
            continue
        if a.degree(v) and not _gcd_free_of(a, b, v, gens):
            live.append(v)
    if not live:
        return _normalize_gcd(shared)
    v = min(live, key=lambda g: min(a.degree(g), b.degree(g)))
    fu = _as_univar(a, v)
    gu = _as_univar(b, v)
    cf = _gcd_list(fu.values())
    cg = _gcd_list(gu.values())
    c = poly_gcd(cf, cg)
    fu = {e: poly_divexact(p, cf) for e, p in fu.items()}
    gu = {e: poly_divexact(p, cg) for e, p in gu.items()}
    if (max(fu) if fu else -1) < (max(gu) if gu else -1):
        fu, gu = gu, fu
    while gu:
        r = _primitive_univar(_prem(fu, gu, v))
        fu, gu = gu, r
    core = _from_univar(_primitive_univar(fu), v)
    return _normalize_gcd(shared * c * core)


def poly_divexact(f: Poly, g: Poly) -> Poly:
    """Exact division f/g; raises if g does not divide f."""
    if g.is_zero():
        raise ZeroDivisionError("polynomial division by zero")
    if f.is_zero():
        return f
    if g.is_const():
        return f.scale(Fraction(1) / g.const_value())
    gens = sorted(f.gens() | g.gens())

    def keyfun(m):
        md = dict(m)
        return (mono_degree(m), tuple(md.get(gn, 0) for gn in gens))

    q: dict = {}
    r = f
    g_lead = max(g.terms, key=keyfun)
    g_lc = g.terms[g_lead]
    while not r.is_zero():
        r_lead = max(r.terms, key=keyfun)
        if not mono_divides(g_lead, r_lead):
            raise ValueError("inexact polynomial division")
        m = mono_div(r_lead, g_lead)
        c = r.terms[r_lead] / g_lc
        q[m] = q.get(m, 0) + c
        r = r - Poly({m: c}) * g
    return Poly(q)


class CoeffFrac:
    """Reduced fraction of polynomials; the coefficient field of the term language.

    Invariants: gcd(num, den) = 1 and den is monic under graded lex.
    """

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num: Poly, den: Poly | None = None, reduce: bool = True):
        den = den if den is not None else P_ONE
        if den.is_zero():
            raise ZeroDivisionError("zero denominator in coefficient fraction")
        if num.is_zero():
            den = P_ONE
        else:
            if reduce and not den.is_const():
                g = poly_gcd(num, den)
                if not (g.is_const() and g.const_value() == 1):
                    num = poly_divexact(num, g)
                    den = poly_divexact(den, g)
            lc = den.lead_coeff()
            if lc != 1:
                inv = Fraction(1) / lc
                num = num.scale(inv)
                den = den.scale(inv)
        self.num = num
        self.den = den
        self._hash = hash((num.key, den.key))

    @classmethod
    def const(cls, c) -> "CoeffFrac":
        return cls(Poly.const(c))

    @classmethod
    def from_poly(cls, p: Poly) -> "CoeffFrac":
        return cls(p)

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_const(self) -> bool:
        return self.num.is_const() and self.den.is_const()

    def const_value(self) -> Fraction:
        return self.num.const_value() / self.den.const_value()

    def gens(self) -> set:
        return self.num.gens() | self.den.gens()

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CoeffFrac)
            and self.num == other.num
            and self.den == other.den
        )

    def __hash__(self) -> int:
        return self._hash

    def __add__(self, other: "CoeffFrac") -> "CoeffFrac":
        # Henrici's scheme: with both inputs reduced, only the denominator
        # gcd and the cofactor gcd are needed; the result is reduced by
        # construction and the big products never see a gcd.
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        n1, d1 = self.num, self.den
        n2, d2 = other.num, other.den
        if d1 == d2:
            num = n1 + n2
            g = poly_gcd(num, d1)
            if not (g.is_const() and g.const_value() == 1):
                return CoeffFrac(poly_divexact(num, g), poly_divexact(d1, g),
                                 reduce=False)
            return CoeffFrac(num, d1, reduce=False)
        g = poly_gcd(d1, d2)
        if g.is_const():
            return CoeffFrac(n1 * d2 + n2 * d1, d1 * d2, reduce=False)
        d1g = poly_divexact(d1, g)
        d2g = poly_divexact(d2, g)
        t = n1 * d2g + n2 * d1g
        h = poly_gcd(t, g)
        if h.is_const():
            return CoeffFrac(t, d1 * d2g, reduce=False)
        return CoeffFrac(
            poly_divexact(t, h), poly_divexact(d1, h) * d2g, reduce=False
        )

    def __neg__(self) -> "CoeffFrac":
        return CoeffFrac(-self.num, self.den, reduce=False)

    def __sub__(self, other: "CoeffFrac") -> "CoeffFrac":
        return self + (-other)

    def __mul__(self, other: "CoeffFrac") -> "CoeffFrac":
        if self.is_zero() or other.is_zero():
            return F_ZERO
        # cross-reduce; the cross-reduced product is reduced by construction
        n1, d2 = self.num, other.den
        n2, d1 = other.num, self.den
        g1 = poly_gcd(n1, d2)
        if not (g1.is_const() and g1.const_value() == 1):
            n1 = poly_divexact(n1, g1)
            d2 = poly_divexact(d2, g1)
        g2 = poly_gcd(n2, d1)
        if not (g2.is_const() and g2.const_value() == 1):
            n2 = poly_divexact(n2, g2)
            d1 = poly_divexact(d1, g2)
        return CoeffFrac(n1 * n2, d1 * d2, reduce=False)

    def inverse(self) -> "CoeffFrac":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero coefficient")
        return CoeffFrac(self.den, self.num)

    def __truediv__(self, other: "CoeffFrac") -> "CoeffFrac":
        return self * other.inverse()

    def deriv(self, gen: str) -> "CoeffFrac":
        dn = self.num.deriv(gen)
        dd = self.den.deriv(gen)
        if dd.is_zero():
            return CoeffFrac(dn, self.den)
        return CoeffFrac(dn * self.den - self.num * dd, self.den * self.den)

    def subst(self, gen: str, value) -> "CoeffFrac":
        num = self.num.subst(gen, value)
        den = self.den.subst(gen, value)
        if den.is_zero():
            raise PoleError(
                f"denominator vanished when substituting {gen}"
            )
        return CoeffFrac(num, den)

    def eval(self, values: dict) -> Fraction:
        den = self.den.eval(values)
        if den == 0:
            raise PoleError("denominator vanished at evaluation point")
        return self.num.eval(values) / den

    def sign(self) -> int:
        if self.num.is_zero():
            return 0
        return 1 if self.num.lead_coeff() > 0 else -1

    def __repr__(self) -> str:
        return f"CoeffFrac({self.num!r}, {self.den!r})"


F_ZERO = CoeffFrac(P_ZERO)
F_ONE = CoeffFrac(P_ONE)

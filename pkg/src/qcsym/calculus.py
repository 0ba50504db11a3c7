"""Differentiation, substitution, collection, splitting and the Euler ODE solver."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    AmbiguousGradingError,
    DivisionError,
    ResonanceError,
    TermLanguageError,
)
from .expr import (
    AFF_ZERO,
    AffineExponent,
    CoeffFrac,
    Expr,
    FnAtom,
    Term,
)
from .poly import F_ONE, Poly

# ---------------------------------------------------------------------------
# differentiation


def _atom_deriv(a: FnAtom, var: str) -> FnAtom | None:
    if var not in a.deps:
        return None
    return FnAtom(
        a.name,
        a.dt + (var == "t"),
        a.dx + (var == "x"),
        a.dV + (var == "V"),
        1,
        a.deps,
    )


def diff(e: Expr, var: str) -> Expr:
    """Partial derivative with respect to t, x or V (linear, product rule)."""
    if var not in ("t", "x", "V"):
        raise ValueError(f"cannot differentiate in {var!r}")
    out = []
    for t in e.terms:
        if var == "V":
            if not t.vpow.is_zero():
                c = CoeffFrac(t.vpow.to_poly())
                out.append(
                    Term(
                        t.coeff * c,
                        t.vpow + AffineExponent.const(-1),
                        t.expc,
                        t.fns,
                    )
                )
            if not t.expc.is_zero():
                c = CoeffFrac(t.expc.to_poly())
                out.append(Term(t.coeff * c, t.vpow, t.expc, t.fns))
        else:
            dc = t.coeff.deriv(var)
            if not dc.is_zero():
                out.append(Term(dc, t.vpow, t.expc, t.fns))
        for i, a in enumerate(t.fns):
            da = _atom_deriv(a, var)
            if da is None:
                continue
            rest = list(t.fns)
            if a.power == 1:
                del rest[i]
            else:
                rest[i] = FnAtom(a.name, a.dt, a.dx, a.dV, a.power - 1, a.deps)
            coeff = t.coeff * CoeffFrac.const(a.power)
            new_fns = _sorted_merge(tuple(rest), da)
            out.append(Term(coeff, t.vpow, t.expc, new_fns))
    return Expr.from_terms(out)


def _sorted_merge(fns: tuple, extra: FnAtom) -> tuple:
    from .expr import _merge_fns

    return _merge_fns(fns, (extra,))


# ---------------------------------------------------------------------------
# substitution


def _parse_binding_key(key: str) -> tuple:
    """Split 'f_x' into (name, dt, dx, dV); bare names give (name, 0, 0, 0)."""
    if "_" in key:
        name, suffix = key.split("_", 1)
        return (name, suffix.count("t"), suffix.count("x"), suffix.count("V"))
    return (key, 0, 0, 0)


def _coerce_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    return Expr.const(Fraction(value))


def _diff_many(e: Expr, var: str, count: int) -> Expr:
    for _ in range(count):
        e = diff(e, var)
    return e


def substitute(e: Expr, bindings: dict, ctx=None) -> Expr:
    """Substitute function atoms and parameter symbols.

    Keys are parameter names, function names, or derivative keys such as
    'f_x' (which rewrite every atom carrying at least that many derivative
    indices).  Function bindings are applied first, then parameter bindings
    are substituted through the whole result, so numeric instantiations see
    concrete functions.
    """
    from .expr import DEFAULT_CONTEXT

    ctx = ctx or DEFAULT_CONTEXT
    fn_bindings: dict = {}
    param_bindings: dict = {}
    for key, value in bindings.items():
        name, dt, dx, dV = _parse_binding_key(str(key))
        is_fn = (dt or dx or dV) or name in ctx.fns or (
            name not in ctx.params and _mentions_fn(e, name)
        )
        if is_fn:
            fn_bindings[(name, dt, dx, dV)] = _coerce_expr(value)
        else:
            param_bindings[name] = value
    if fn_bindings:
        e = _substitute_fns(e, fn_bindings)
    if param_bindings:
        e = _substitute_params(e, param_bindings)
    return e


def _mentions_fn(e: Expr, name: str) -> bool:
    for t in e.terms:
        for a in t.fns:
            if a.name == name:
                return True
    return False


def _substitute_fns(e: Expr, bindings: dict) -> Expr:
    out = Expr.zero()
    for t in e.terms:
        factors = [Expr((Term(t.coeff, t.vpow, t.expc, ()),))]
        for a in t.fns:
            match = _best_binding(a, bindings)
            if match is None:
                factors.append(Expr.atom(a))
                continue
            (bname, bdt, bdx, bdV), value = match
            rep = _diff_many(value, "t", a.dt - bdt)
            rep = _diff_many(rep, "x", a.dx - bdx)
            rep = _diff_many(rep, "V", a.dV - bdV)
            if a.power < 0:
                try:
                    rep = rep.invert() ** (-a.power)
                except DivisionError as exc:
                    raise DivisionError(
                        f"substitution makes {a.base_text()}^({a.power}) "
                        f"non-invertible: {exc}"
                    ) from None
            else:
                rep = rep ** a.power
            factors.append(rep)
        term_expr = factors[0]
        for f in factors[1:]:
            term_expr = term_expr * f
        out = out + term_expr
    return out


def _best_binding(a: FnAtom, bindings: dict):
    best = None
    best_rank = -1
    for key, value in bindings.items():
        name, dt, dx, dV = key
        if name != a.name:
            continue
        if a.dt >= dt and a.dx >= dx and a.dV >= dV:
            rank = dt + dx + dV
            if rank > best_rank:
                best = (key, value)
                best_rank = rank
    return best


def _substitute_params(e: Expr, bindings: dict) -> Expr:
    affine_bindings = {}
    for name, value in bindings.items():
        affine_bindings[name] = _coerce_affine(name, value)
    out = []
    for t in e.terms:
        coeff = t.coeff
        for name, (aff, poly) in affine_bindings.items():
            if name in coeff.gens():
                coeff = coeff.subst(name, poly)
        vpow = t.vpow
        expc = t.expc
        for name, (aff, poly) in affine_bindings.items():
            if name in ("p", "k", "n"):
                vpow = vpow.subst(name, aff)
                expc = expc.subst(name, aff)
        out.append(Term(coeff, vpow, expc, t.fns))
    return Expr.from_terms(out)


def _coerce_affine(name: str, value) -> tuple:
    """Return (affine form, polynomial form) for a parameter binding value."""
    if isinstance(value, AffineExponent):
        return value, value.to_poly()
    if isinstance(value, Expr):
        from .parser import _as_affine

        aff = _as_affine(value)
        return aff, aff.to_poly()
    aff = AffineExponent.const(Fraction(value))
    return aff, Poly.const(Fraction(value))


# ---------------------------------------------------------------------------
# constraints


@dataclass(frozen=True, slots=True)
class Constraint:
    """An affine relation lhs = rhs, either asserted or excluded."""

    lhs: AffineExponent
    rhs: AffineExponent
    kind: str  # "equal" | "forbidden"

    def form(self) -> AffineExponent:
        return self.lhs - self.rhs

    @staticmethod
    def equal(lhs, rhs) -> "Constraint":
        return Constraint(_aff(lhs), _aff(rhs), "equal")

    @staticmethod
    def forbidden(lhs, rhs) -> "Constraint":
        return Constraint(_aff(lhs), _aff(rhs), "forbidden")

    @staticmethod
    def parse(text: str, kind: str = "equal") -> "Constraint":
        from .parser import parse_affine

        if "!=" in text:
            lhs, rhs = text.split("!=", 1)
            kind = "forbidden"
        else:
            lhs, rhs = text.split("=", 1)
        return Constraint(parse_affine(lhs), parse_affine(rhs), kind)

    def solved_for(self) -> tuple:
        """Return (name, affine value) for a single-variable relation.

        A bare-variable left side keeps its orientation; otherwise the
        relation is solved for k, then p, then n.
        """
        for name in ("p", "k", "n"):
            if (
                self.lhs.coeff_of(name) == 1
                and self.lhs.key().count(Fraction(0)) == 3
                and not self.rhs.coeff_of(name)
            ):
                return name, self.rhs
        form = self.form()
        for name in ("k", "p", "n"):
            c = form.coeff_of(name)
            if c:
                kw = {"cp": form.cp, "ck": form.ck, "cn": form.cn, "c0": form.c0}
                kw[{"p": "cp", "k": "ck", "n": "cn"}[name]] = Fraction(0)
                rest = AffineExponent(kw["cp"], kw["ck"], kw["cn"], kw["c0"])
                return name, rest.scale(Fraction(-1) / c)
        raise ValueError("constraint involves no exponent parameter")

    def __str__(self) -> str:
        from .expr import affine_text

        op = "=" if self.kind == "equal" else "!="
        name, value = self.solved_for()
        return f"{name}{op}{affine_text(value)}"


def _aff(v) -> AffineExponent:
    if isinstance(v, AffineExponent):
        return v
    if isinstance(v, str):
        from .parser import parse_affine

        return parse_affine(v)
    return AffineExponent.const(Fraction(v))


def _apply_equalities(form: AffineExponent, equalities) -> AffineExponent:
    for c in equalities:
        name, value = c.solved_for()
        form = form.subst(name, value)
    return form


def _proportional(a: AffineExponent, b: AffineExponent) -> bool:
    """True when a = c*b for a nonzero rational c."""
    av, bv = a.key(), b.key()
    ratio = None
    for x, y in zip(av, bv):
        if (x == 0) != (y == 0):
            return False
        if y != 0:
            r = x / y
            if ratio is None:
                ratio = r
            elif r != ratio:
                return False
    return ratio is not None and ratio != 0


def excluded_by(form: AffineExponent, assumptions) -> bool:
    """True when the relation form = 0 is ruled out by the assumptions."""
    equalities = [c for c in assumptions if c.kind == "equal"]
    reduced = _apply_equalities(form, equalities)
    if reduced.is_zero():
        return False
    if reduced.is_const():
        return True
    for c in assumptions:
        if c.kind != "forbidden":
            continue
        other = _apply_equalities(c.form(), equalities)
        if _proportional(reduced, other):
            return True
    return False


# ---------------------------------------------------------------------------
# collection and splitting


@dataclass(frozen=True, slots=True)
class CollectKey:
    """Grading key: V-power, exponential, and V-dependent function signature."""

    vpow: AffineExponent
    expc: AffineExponent
    fpart: tuple

    def sort_key(self) -> tuple:
        return (
            self.vpow.key(),
            self.expc.key(),
            tuple(a.sort_key() + (a.power,) for a in self.fpart),
        )

    def atom_expr(self) -> Expr:
        return Expr((Term(F_ONE_FRAC, self.vpow, self.expc, self.fpart),))

    def __str__(self) -> str:
        return str(self.atom_expr())


F_ONE_FRAC = CoeffFrac(Poly.const(1))


def collect(e: Expr) -> dict:
    """Group terms by CollectKey; coefficients are free of V.

    Returns an ordered mapping (descending key order); summing
    coefficient * key.atom_expr() over all entries rebuilds e.
    """
    groups: dict = {}
    for t in e.terms:
        vdep = tuple(a for a in t.fns if "V" in a.deps)
        rest = tuple(a for a in t.fns if "V" not in a.deps)
        key = CollectKey(t.vpow, t.expc, vdep)
        coeff_term = Term(t.coeff, AFF_ZERO, AFF_ZERO, rest)
        groups.setdefault(key, []).append(coeff_term)
    ordered = sorted(groups, key=lambda k: k.sort_key(), reverse=True)
    return {k: Expr.from_terms(groups[k]) for k in ordered}


def _keys_distinct(k1: CollectKey, k2: CollectKey, assumptions) -> bool:
    if k1.fpart != k2.fpart:
        return True
    equalities = [c for c in assumptions if c.kind == "equal"]
    dc = _apply_equalities(k1.expc - k2.expc, equalities)
    dv = _apply_equalities(k1.vpow - k2.vpow, equalities)
    if dc.is_const() and not dc.is_zero():
        return True
    if dc.is_zero():
        if dv.is_zero():
            return False
        if dv.is_const():
            return True
        return excluded_by(dv, assumptions)
    # exponential parts may or may not merge; require them ruled out
    return excluded_by(k1.expc - k2.expc, assumptions)


@dataclass(frozen=True)
class EquationSystem:
    """Ordered equations (each required to vanish identically) with their grading."""

    equations: tuple
    grading: tuple

    def __len__(self) -> int:
        return len(self.equations)

    def to_json(self) -> list:
        return [str(eq) for eq in self.equations]


def split(e: Expr, assumptions=()) -> EquationSystem:
    """Split an identity into one equation per grading key.

    Refuses (AmbiguousGradingError) when two keys cannot be proven distinct
    from the assumptions; silent splitting would hide degenerate cases.
    """
    groups = collect(e)
    keys = list(groups)
    for i, k1 in enumerate(keys):
        for k2 in keys[i + 1:]:
            if not _keys_distinct(k1, k2, assumptions):
                raise AmbiguousGradingError(str(k1), str(k2))
    return EquationSystem(
        equations=tuple(groups[k] for k in keys),
        grading=tuple(keys),
    )


def collect_in(e: Expr, gen: str) -> dict:
    """Collect by the power of a lattice generator (t or x) in coefficients.

    Denominators must be free of the generator.  Returns degree -> Expr with
    generator-free coefficients, in descending degree order.
    """
    groups: dict = {}
    for t in e.terms:
        if gen in t.coeff.den.gens():
            raise TermLanguageError(
                f"cannot collect in {gen}: denominator depends on it"
            )
        for mono, c in t.coeff.num.terms.items():
            md = dict(mono)
            d = md.pop(gen, 0)
            stripped = Poly({tuple(sorted(md.items())): c})
            coeff = CoeffFrac(stripped, t.coeff.den)
            groups.setdefault(d, []).append(Term(coeff, t.vpow, t.expc, t.fns))
    return {
        d: Expr.from_terms(groups[d]) for d in sorted(groups, reverse=True)
    }


# ---------------------------------------------------------------------------
# the first-order Euler-type ODE solver


def euler_ode_solve(
    s: AffineExponent,
    rhs: Expr,
    assumptions=(),
    constant_name: str = "lambda1",
) -> Expr:
    """Solve F_V - (s/V) F = rhs for rhs a sum of pure V-power terms.

    The general solution is C*V^s plus, per right-hand-side power e, the
    term coeff/(e + 1 - s) * V^(e+1).  A resonance e + 1 = s that the
    assumptions do not exclude is an error.
    """
    groups: dict = {}
    for t in rhs.terms:
        if not t.expc.is_zero() or any("V" in a.deps for a in t.fns):
            raise TermLanguageError(
                "right-hand side must be a sum of pure V-power terms"
            )
        groups.setdefault(t.vpow.key(), []).append(t)
    out = [Term(CoeffFrac(Poly.var(constant_name)), s, AFF_ZERO, ())]
    for key, terms in groups.items():
        e = AffineExponent(*key)
        denom = e + AffineExponent.const(1) - s
        if denom.is_zero():
            raise ResonanceError(
                f"resonant power V^({e}): homogeneous exponent reached"
            )
        if not denom.is_const() and not excluded_by(denom, assumptions):
            raise ResonanceError(
                f"possibly resonant power V^({e}): cannot exclude {denom} = 0"
            )
        inv = CoeffFrac(Poly.const(1), denom.to_poly())
        for t in terms:
            out.append(
                Term(t.coeff * inv, e + AffineExponent.const(1), AFF_ZERO, t.fns)
            )
    return Expr.from_terms(out)


# ---------------------------------------------------------------------------
# equation-level helpers


def eq_normalize(e: Expr) -> Expr:
    """Scale an equation so its leading canonical term has coefficient 1."""
    if e.is_zero():
        return e
    return e.scale(e.lead().coeff.inverse())


def equal_up_to_unit(e1: Expr, e2: Expr) -> bool:
    """True when e1 = u * e2 for a nonzero coefficient-field unit u."""
    if e1.is_zero() or e2.is_zero():
        return e1.is_zero() and e2.is_zero()
    t1, t2 = e1.lead(), e2.lead()
    if t1.signature != t2.signature:
        return False
    u = t1.coeff / t2.coeff
    return (e1 - e2.scale(u)).is_zero()


def solve_linear_for(e: Expr, atom_key: str) -> Expr:
    """Solve e = 0 for an atom (given as a name or derivative key like 'f_x').

    The atom must appear linearly; its total coefficient must be an
    invertible single-term expression.  Returns the solved value.
    """
    name, dt, dx, dV = _parse_binding_key(atom_key)
    target = (name, dt, dx, dV)
    with_atom = []
    rest = []
    for t in e.terms:
        hits = [a for a in t.fns if (a.name, a.dt, a.dx, a.dV) == target]
        if not hits:
            rest.append(t)
            continue
        if len(hits) != 1 or hits[0].power != 1:
            raise TermLanguageError(f"{atom_key} does not appear linearly")
        others = tuple(a for a in t.fns if (a.name, a.dt, a.dx, a.dV) != target)
        with_atom.append(Term(t.coeff, t.vpow, t.expc, others))
    if not with_atom:
        raise TermLanguageError(f"{atom_key} does not appear in the equation")
    coeff = Expr.from_terms(with_atom)
    solution = -(Expr.from_terms(rest) / coeff)
    if any((a.name, a.dt, a.dx, a.dV) == target
           for t in solution.terms for a in t.fns):
        raise TermLanguageError(f"equation is not linear in {atom_key}")
    return solution

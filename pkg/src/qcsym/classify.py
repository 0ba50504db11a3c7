"""Case analysis for the power-family classification.

Covers the xi = a(t,x)V + f(t,x) branch (case B: general eta, source-term
extraction, constancy consequences, exponent-coincidence enumeration and
tables) and the xi = f(t,x), eta = g(t,x)V + h(t,x) branch (case C: the
p = 0 and k = 1, p = 2 derivation chains), with every step checked as a
zero-residual or canonical-equality assertion.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

from .calculus import (
    CollectKey,
    Constraint,
    EquationSystem,
    collect,
    collect_in,
    diff,
    equal_up_to_unit,
    euler_ode_solve,
    excluded_by,
    solve_linear_for,
    split,
    substitute,
)
from .errors import AmbiguousGradingError, TableError, VerificationError
from .expr import AFF_ZERO, AffineExponent, Expr
from .determining import EvolutionEq, SymOperator, check_operator, generate_determining_system, normalize_operator
from .parser import parse, parse_affine

_FIXTURE_DIR = Path(__file__).parent / "fixtures"


@lru_cache(maxsize=None)
def fixture_text(name: str) -> str:
    return (_FIXTURE_DIR / name).read_text().strip()


def fixture_json(name: str):
    # parsed fresh on every call so callers can never corrupt the cache
    return json.loads(fixture_text(name))


CASE_B_ASSUMPTIONS = (
    Constraint.parse("k!=0"),
    Constraint.parse("k!=p"),
    Constraint.parse("k!=p+1"),
    Constraint.parse("p!=-1"),
    Constraint.parse("p!=-2"),
    Constraint.parse("p!=-3"),
    Constraint.parse("k!=-1"),
    Constraint.parse("k!=-2"),
)


@lru_cache(maxsize=None)
def power_system():
    return generate_determining_system(EvolutionEq.power())


# ---------------------------------------------------------------------------
# case B: xi = a V + f


def _integrate_v(e: Expr, assumptions) -> Expr:
    """Antiderivative in V of a sum of V-power terms."""
    out = Expr.zero()
    for t in e.terms:
        if not t.expc.is_zero():
            raise VerificationError("integrate", "exponential atoms unsupported")
        shift = t.vpow + AffineExponent.const(1)
        if shift.is_zero() or (
            not shift.is_const() and not excluded_by(shift, assumptions)
        ):
            raise VerificationError(
                "integrate", f"cannot integrate V^({t.vpow}): division by {shift}"
            )
        term = Expr((type(t)(t.coeff, shift, t.expc, t.fns),))
        out = out + term * Expr.from_coeff(
            _inv_affine(shift)
        )
    return out


def _inv_affine(a: AffineExponent):
    from .poly import CoeffFrac, Poly

    return CoeffFrac(Poly.const(1), a.to_poly())


def solve_eta_case_b() -> Expr:
    """General eta once xi = a V + f, by double integration in V.

    The second determining equation prescribes eta_VV; integrating twice and
    adding the homogeneous part g V + h yields the closed form, valid under
    p != -2, -3 and k != -1, -2.
    """
    eq2 = power_system().equations[1]
    e = substitute(eq2, {"xi": parse("a*V + f")})
    rhs = solve_linear_for(e, "eta_VV")
    inner = _integrate_v(rhs, CASE_B_ASSUMPTIONS)
    eta = _integrate_v(inner, CASE_B_ASSUMPTIONS)
    return eta + parse("g*V + h")


def extract_F(subs: dict | None = None) -> Expr:
    """Isolate the source term from the third determining equation in case B.

    The coefficient of F is proportional to a, so the step requires a != 0;
    binding a to zero through ``subs`` raises accordingly.
    """
    eq3 = power_system().equations[2]
    e = substitute(eq3, {"xi": parse("a*V + f"), "eta": solve_eta_case_b()})
    if subs:
        e = substitute(e, subs)
    try:
        return solve_linear_for(e, "F")
    except Exception as exc:
        raise VerificationError(
            "extract-source-term", f"coefficient of F not invertible: {exc}"
        ) from None


@dataclass(frozen=True)
class ConstancyRequirement:
    """A collect key whose coefficient must not depend on t or x."""

    key: CollectKey
    coefficient: Expr
    dt_zero: Expr
    dx_zero: Expr

    def already_constant(self) -> bool:
        return self.dt_zero.is_zero() and self.dx_zero.is_zero()


def constancy_constraints(Fexpr: Expr, assumptions=()) -> list:
    """Constancy requirements for a source term depending on V only.

    One requirement per key whose coefficient still depends on t or x;
    constant-only input yields an empty list.
    """
    groups = collect(Fexpr)
    keys = list(groups)
    for i, k1 in enumerate(keys):
        for k2 in keys[i + 1:]:
            from .calculus import _keys_distinct

            if not _keys_distinct(k1, k2, assumptions):
                raise AmbiguousGradingError(str(k1), str(k2))
    out = []
    for key, coeff in groups.items():
        req = ConstancyRequirement(key, coeff, diff(coeff, "t"), diff(coeff, "x"))
        if not req.already_constant():
            out.append(req)
    return out


def pairwise_distinct_assumptions(exponents) -> tuple:
    """Forbidden constraints making every exponent pair provably distinct.

    This encodes the fully generic parameter point, where none of the
    coincidence cases holds.
    """
    exps = [_as_aff(e) for e in exponents]
    seen = set()
    out = []
    for i, e1 in enumerate(exps):
        for e2 in exps[i + 1:]:
            delta = e1 - e2
            if delta.is_const():
                continue
            key = _direction_key(delta)
            if key in seen:
                continue
            seen.add(key)
            out.append(Constraint(e1, e2, "forbidden"))
    return tuple(out)


def _direction_key(delta: AffineExponent) -> tuple:
    for c in delta.key():
        if c:
            scaled = delta.scale(Fraction(1) / c)
            return scaled.key()
    return delta.key()


def constants_forced(Fexpr: Expr, assumptions=()) -> list:
    """Iteratively derive which unknown functions the constancy forces constant.

    A requirement whose t- and x-derivatives each reduce to a single term
    carrying one derived atom (with a coefficient that cannot vanish under
    the assumptions) forces that function constant; forced functions are
    replaced by fresh constants and the analysis repeats to a fixed point.
    """
    forced: list = []
    current = Fexpr
    while True:
        new = []
        for req in constancy_constraints(current, assumptions):
            for deriv in (req.dt_zero, req.dx_zero):
                name = _forced_name(deriv, assumptions)
                if name and name not in forced and name not in new:
                    new.append(name)
        if not new:
            return forced
        for name in new:
            forced.append(name)
            current = substitute(current, {name: Expr.generator(name + "0")})


def _forced_name(deriv: Expr, assumptions) -> str | None:
    if len(deriv.terms) != 1:
        return None
    t = deriv.terms[0]
    derived = [a for a in t.fns if a.is_derived()]
    if len(derived) != 1 or derived[0].power != 1:
        return None
    # The multiplying coefficient must be certifiably nonzero.  Symbols other
    # than p, k, n are generic nonzero constants, so only the exponent-
    # parameter content matters: it must be a nonzero constant or an affine
    # form whose vanishing the assumptions exclude.
    restriction = _pkn_restriction(t.coeff.num)
    if restriction.is_zero():
        return None
    aff = _poly_as_affine(restriction)
    if aff is None:
        return None
    if not aff.is_const() and not excluded_by(aff, assumptions):
        return None
    return derived[0].name


def _pkn_restriction(p):
    from .poly import Poly

    out: dict = {}
    for mono, c in p.terms.items():
        sub = tuple((g, e) for g, e in mono if g in ("p", "k", "n"))
        out[sub] = out.get(sub, 0) + c
    return Poly(out)


def _poly_as_affine(p) -> AffineExponent | None:
    out = AFF_ZERO
    for mono, c in p.terms.items():
        if not mono:
            out = out + AffineExponent.const(c)
        elif len(mono) == 1 and mono[0][1] == 1 and mono[0][0] in ("p", "k", "n"):
            name = mono[0][0]
            out = out + AffineExponent.of(
                cp=c if name == "p" else 0,
                ck=c if name == "k" else 0,
                cn=c if name == "n" else 0,
            )
        else:
            return None
    return out


# ---------------------------------------------------------------------------
# coincidence enumeration


@dataclass(frozen=True)
class SpecialCase:
    """A parameter relation that merges exponents or kills a leading factor."""

    constraint: Constraint
    provenance: tuple  # ("collision", target, other) | ("vanishing", target, root)

    def __str__(self) -> str:
        return str(self.constraint)


def _normal_constraint(delta: AffineExponent) -> Constraint | None:
    """Normal form of the relation delta = 0: k = ..., p = value, or n = ...."""
    for name in ("k", "p", "n"):
        c = delta.coeff_of(name)
        if c:
            kw = {"cp": delta.cp, "ck": delta.ck, "cn": delta.cn, "c0": delta.c0}
            kw[{"p": "cp", "k": "ck", "n": "cn"}[name]] = Fraction(0)
            rest = AffineExponent(kw["cp"], kw["ck"], kw["cn"], kw["c0"])
            value = rest.scale(Fraction(-1) / c)
            lhs = AffineExponent.of(
                cp=1 if name == "p" else 0,
                ck=1 if name == "k" else 0,
                cn=1 if name == "n" else 0,
            )
            return Constraint(lhs, value, "equal")
    return None


def _case_order_key(c: Constraint) -> tuple:
    name, value = c.solved_for()
    rank = {"p": 0, "k": 1, "n": 2}[name]
    if value.is_const():
        return (rank, 0, value.c0, 0, 0)
    return (rank, 1, value.cp, value.ck, value.c0)


def enumerate_special_cases(
    exponents, targets=None, forbidden=(), vanishing=()
) -> list:
    """All parameter relations equating a target exponent with another one.

    With targets=None every unordered pair is examined.  Supplied
    coefficient-vanishing roots join the collision cases; results are
    deduplicated and canonically ordered, and relations excluded by the
    forbidden constraints are dropped.
    """
    exps = [_as_aff(e) for e in exponents]
    if targets is None:
        pairs = [
            (exps[i], exps[j])
            for i in range(len(exps))
            for j in range(i + 1, len(exps))
        ]
    else:
        tgts = [_as_aff(t) for t in targets]
        pairs = [(t, e) for t in tgts for e in exps if e != t]
    found: dict = {}
    for target, other in pairs:
        delta = target - other
        if delta.is_const():
            continue
        if any(
            c.kind == "forbidden" and _proportional_forms(delta, c.form())
            for c in forbidden
        ):
            continue
        constraint = _normal_constraint(delta)
        key = (constraint.lhs.key(), constraint.rhs.key())
        if key not in found:
            found[key] = SpecialCase(
                constraint, ("collision", str(target), str(other))
            )
    for target, root in vanishing:
        constraint = root if isinstance(root, Constraint) else Constraint.parse(root)
        if any(
            c.kind == "forbidden" and _proportional_forms(constraint.form(), c.form())
            for c in forbidden
        ):
            continue
        key = (constraint.lhs.key(), constraint.rhs.key())
        if key not in found:
            found[key] = SpecialCase(
                constraint, ("vanishing", str(_as_aff(target)), str(constraint))
            )
    return sorted(found.values(), key=lambda sc: _case_order_key(sc.constraint))


def _proportional_forms(a: AffineExponent, b: AffineExponent) -> bool:
    from .calculus import _proportional

    return _proportional(a, b)


def _as_aff(v) -> AffineExponent:
    if isinstance(v, AffineExponent):
        return v
    return parse_affine(str(v))


def six_power_cases() -> list:
    """Coincidence cases among the six non-constant-coefficient powers."""
    data = fixture_json("coincidence_six.json")
    forbidden = tuple(Constraint.parse(c) for c in data["forbidden"])
    return enumerate_special_cases(data["exponents"], None, forbidden)


def fifteen_power_cases() -> list:
    """Coincidence cases for the two leading powers of the extracted source."""
    data = fixture_json("coincidence_fifteen.json")
    forbidden = tuple(Constraint.parse(c) for c in data["forbidden"])
    exponents = [parse_affine(t) for t in fixture_json("powers_fifteen.json")]
    vanishing = [(t, r) for t, r in data["vanishing"]]
    return enumerate_special_cases(
        exponents, data["targets"], forbidden, vanishing
    )


def fifteen_powers() -> list:
    """The fifteen source-term powers in their catalogued order."""
    return [parse_affine(t) for t in fixture_json("powers_fifteen.json")]


def fifteen_powers_k_eq_p_minus_1() -> list:
    """The fifteen powers specialized by k = p - 1, duplicates preserved."""
    shift = parse_affine("p-1")
    return [a.subst("k", shift) for a in fifteen_powers()]


# ---------------------------------------------------------------------------
# coincidence tables


@dataclass(frozen=True)
class CaseTable:
    """One target power tabulated against columns; values are p or '-'."""

    case: Constraint | None
    target: AffineExponent
    columns: tuple
    values: tuple  # Fraction | None
    excluded: tuple  # bool per column

    def value_strings(self) -> list:
        return ["-" if v is None else str(v) for v in self.values]

    def to_json(self) -> dict:
        return {
            "case": str(self.case) if self.case else "",
            "target": str(self.target),
            "columns": [str(c) for c in self.columns],
            "values": self.value_strings(),
            "excluded": list(self.excluded),
        }


def coincidence_table(target, columns, forbidden=(), case=None) -> CaseTable:
    """Tabulate the p values at which the target power meets each column."""
    target = _as_aff(target)
    cols = [_as_aff(c) for c in columns]
    equalities = [case] if case else []
    values = []
    excluded = []
    for col in cols:
        delta = target - col
        if delta.ck or delta.cn:
            raise TableError(f"column {col} is not a function of p alone")
        if delta.is_zero():
            raise TableError(
                f"column {col} coincides with the target always"
            )
        if not delta.cp:
            values.append(None)
            excluded.append(False)
            continue
        value = -delta.c0 / delta.cp
        values.append(value)
        excluded.append(_value_excluded(value, equalities, forbidden))
    return CaseTable(
        case=case,
        target=target,
        columns=tuple(cols),
        values=tuple(values),
        excluded=tuple(excluded),
    )


def _value_excluded(value: Fraction, equalities, forbidden) -> bool:
    pv = AffineExponent.const(value)
    for c in forbidden:
        if c.kind != "forbidden":
            continue
        form = c.form()
        for eq in equalities:
            name, val = eq.solved_for()
            form = form.subst(name, val)
        form = form.subst("p", pv)
        if form.is_zero():
            return True
    return False


def _source_keys_in_catalogue_order(subs: dict | None) -> tuple:
    """Collect keys of the case-B source term after substitutions.

    Returns (ordered distinct keys, coefficient map); the order follows the
    catalogued fifteen-power list (first occurrence wins).
    """
    source = extract_F()
    if subs:
        source = substitute(source, subs)
    groups = collect(source)
    coeffs = {key.vpow.key(): expr for key, expr in groups.items()}
    case_shift = subs.get("k") if subs else None
    ordered = []
    for aff in fifteen_powers():
        if case_shift is not None:
            aff = aff.subst("k", _as_aff(case_shift))
        if aff.key() in coeffs and all(aff != o for o in ordered):
            ordered.append(aff)
    return tuple(ordered), coeffs


def _is_constant_coeff(e: Expr) -> bool:
    if e.is_zero():
        return True
    for t in e.terms:
        if t.fns:
            return False
        if t.coeff.gens() & {"t", "x"}:
            return False
    return True


def coincidence_tables_k_eq_p_minus_1() -> tuple:
    """The two tables for the case k = p - 1.

    The leading-power table treats all functions as unknown; analyzing it
    establishes that the coefficient function a is constant, so the
    subleading table is built with a replaced by a constant.
    """
    case = Constraint.parse("k=p-1")
    shift = parse_affine("p-1")
    forbidden = CASE_B_ASSUMPTIONS
    tables = []
    for target_text, subs in (
        ("2*p+3", {"k": Expr.generator("p") - Expr.one()}),
        ("2*p+1", {"k": Expr.generator("p") - Expr.one(), "a": Expr.generator("a0")}),
    ):
        target = parse_affine(target_text)
        ordered, coeffs = _source_keys_in_catalogue_order(subs)
        columns = [
            aff
            for aff in ordered
            if aff != target and not _is_constant_coeff(coeffs[aff.key()])
        ]
        tables.append(coincidence_table(target, columns, forbidden, case))
    return tuple(tables)


# ---------------------------------------------------------------------------
# chain reports


@dataclass(frozen=True)
class StepResult:
    id: str
    description: str
    passed: bool
    detail: str = ""

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "description": self.description,
            "status": "pass" if self.passed else "fail",
            "detail": self.detail,
        }


@dataclass(frozen=True)
class ChainReport:
    name: str
    steps: tuple

    @property
    def all_passed(self) -> bool:
        return all(s.passed for s in self.steps)

    def to_json(self) -> list:
        return [s.to_json() for s in self.steps]


class _ChainBuilder:
    def __init__(self, name: str, keep_going: bool):
        self.name = name
        self.keep_going = keep_going
        self.steps = []

    def check(self, step_id: str, description: str, ok: bool, detail: str = ""):
        self.steps.append(StepResult(step_id, description, bool(ok), detail))
        if not ok and not self.keep_going:
            raise VerificationError(step_id, detail or description)

    def report(self) -> ChainReport:
        return ChainReport(self.name, tuple(self.steps))


def _match_system(system: EquationSystem, fixture_eqs) -> bool:
    """Each fixture equation must match exactly one split equation up to a unit."""
    remaining = list(system.equations)
    for text in fixture_eqs:
        want = parse(text)
        hit = None
        for i, eq in enumerate(remaining):
            if equal_up_to_unit(eq, want):
                hit = i
                break
        if hit is None:
            return False
        del remaining[hit]
    return not remaining


def _euler_form(e: Expr) -> tuple:
    """Rewrite A*F_V + B*F + R = 0 as F_V - (s/V) F = rhs; return (s, rhs)."""
    a_terms, b_terms, rest = [], [], []
    for t in e.terms:
        fv = [a for a in t.fns if a.name == "F" and a.dV == 1]
        f0 = [a for a in t.fns if a.name == "F" and a.dV == 0]
        if fv:
            a_terms.append(
                type(t)(t.coeff, t.vpow, t.expc, tuple(x for x in t.fns if x not in fv))
            )
        elif f0:
            b_terms.append(
                type(t)(t.coeff, t.vpow, t.expc, tuple(x for x in t.fns if x not in f0))
            )
        else:
            rest.append(t)
    A = Expr.from_terms(a_terms)
    B = Expr.from_terms(b_terms)
    R = Expr.from_terms(rest)
    s_expr = -(B * Expr.vpower(AffineExponent.const(1))) / A
    if len(s_expr.terms) != 1:
        raise VerificationError("euler-form", "equation is not of Euler type")
    st = s_expr.terms[0]
    if st.fns or not st.expc.is_zero() or not st.vpow.is_zero():
        raise VerificationError("euler-form", "equation is not of Euler type")
    s = _poly_as_affine(st.coeff.num)
    if s is None or not st.coeff.den.is_const():
        raise VerificationError("euler-form", "homogeneous exponent not affine")
    rhs = -(R / A)
    return s, rhs


def case_c_chain_p0(keep_going: bool = False) -> ChainReport:
    """The p = 0 derivation chain for xi = f(t,x), eta = g(t,x)V + h(t,x)."""
    fx = fixture_json("chain_p0.json")
    b = _ChainBuilder("case-c-p0", keep_going)
    sysd = power_system()
    bindings = {"xi": parse("f"), "eta": parse("g*V + h")}
    assumptions = (Constraint.parse("k!=0"), Constraint.parse("k!=1"))

    eq3 = substitute(substitute(sysd.equations[2], bindings), {"p": 0})
    b.check(
        "reduce-eq3",
        "third determining equation under xi=f, eta=gV+h, p=0",
        equal_up_to_unit(eq3, parse(fx["eq3_p0"])),
    )

    system = split(eq3, assumptions)
    b.check(
        "split-eq3",
        "split into three equations by powers of V",
        len(system) == 3 and _match_system(system, fx["system_p0"]),
    )

    h_solved = solve_linear_for(parse(fx["system_p0"][0]), "h")
    fx_solved = solve_linear_for(parse(fx["system_p0"][1]), "f_x")
    b.check(
        "consequences",
        "h = 0 and f_x = -k g follow",
        h_solved.is_zero() and fx_solved == parse("-k*g"),
    )

    eq4 = substitute(substitute(sysd.equations[3], bindings), {"p": 0})
    eq4 = substitute(eq4, {"h": 0, "f_x": parse("-k*g")})
    b.check(
        "reduce-eq4",
        "fourth determining equation becomes the linear ODE for F",
        equal_up_to_unit(eq4, parse(fx["ode_for_F"])),
    )

    s, rhs = _euler_form(parse(fx["ode_for_F"]))
    F = euler_ode_solve(s, rhs, assumptions)
    b.check(
        "solve-ode",
        "general solution of the linear ODE",
        F == parse(fx["F_solution"]),
    )

    groups = collect(F)
    k_plus_1 = CollectKey(parse_affine("k+1"), AFF_ZERO, ())
    v_one = CollectKey(parse_affine("1"), AFF_ZERO, ())
    coeff_k1 = groups.get(k_plus_1, Expr.zero())
    coeff_v = groups.get(v_one, Expr.zero())
    b.check(
        "constancy",
        "non-constant coefficients give the two constancy relations",
        coeff_k1 == -parse(fx["constancy"][0]) and coeff_v == parse(fx["constancy"][1]),
    )

    g_alpha = {"g": parse("alpha")}
    b.check(
        "g-depends-on-t",
        "with g = alpha(t) the V^(k+1) coefficient vanishes and f is linear in x",
        substitute(coeff_k1, g_alpha).is_zero()
        and substitute(
            parse("f_x + k*g"), {"f": parse(fx["xi_form"]), **g_alpha}
        ).is_zero(),
    )

    eq_remaining = substitute(
        parse(fx["system_p0"][2]),
        {"f": parse(fx["xi_form"]), "g": parse("alpha"), "h": 0},
    )
    ode_ok = equal_up_to_unit(eq_remaining, parse(fx["alpha_beta_ode"]))
    two_odes = collect_in(parse(fx["alpha_beta_ode"]), "x")
    alpha_beta = {"alpha": parse(fx["alpha"]), "beta": parse(fx["beta"])}
    odes_solved = all(
        substitute(eq, alpha_beta).is_zero() for eq in two_odes.values()
    )
    source_clean = substitute(coeff_v, {"g": parse(fx["alpha"])}).is_zero()
    b.check(
        "alpha-beta",
        "the x-split pair of ODEs is solved by alpha, beta and the V "
        "coefficient of F drops out",
        ode_ok and len(two_odes) == 2 and odes_solved and source_clean,
    )

    ops = fixture_json("operators.json")
    op = normalize_operator(SymOperator.of(**ops["scaling"]))
    eq = EvolutionEq.power(p=0, F2=parse(fx["source_term"]))
    residuals = check_operator(eq, op)
    b.check(
        "scaling-operator",
        "the scaling-translation operator satisfies all four determining "
        "equations",
        all(r.is_zero() for r in residuals),
    )
    return b.report()


def case_c_chain_k1_p2(keep_going: bool = False) -> ChainReport:
    """The k = 1, p = 2 derivation chain for xi = f, eta = gV + h."""
    fx = fixture_json("chain_k1_p2.json")
    b = _ChainBuilder("case-c-k1-p2", keep_going)
    sysd = power_system()
    bindings = {"xi": parse("f"), "eta": parse("g*V + h")}

    eq3_k1 = substitute(substitute(sysd.equations[2], bindings), {"k": 1})
    b.check(
        "reduce-eq3-k1",
        "third determining equation under k=1",
        equal_up_to_unit(eq3_k1, parse(fx["eq3_k1"])),
    )

    eq3 = substitute(eq3_k1, {"p": 2})
    b.check(
        "reduce-eq3-p2",
        "specializing p=2 merges the linear-in-V terms",
        equal_up_to_unit(eq3, parse(fx["eq3_k1_p2"])),
    )

    system = split(eq3)
    b.check(
        "split-eq3",
        "three equations for three unknown functions",
        len(system) == 3 and _match_system(system, fx["system_k1_p2"]),
    )

    eq4 = substitute(substitute(sysd.equations[3], bindings), {"k": 1, "p": 2})
    b.check(
        "reduce-eq4",
        "fourth determining equation with the source still unknown",
        equal_up_to_unit(eq4, parse(fx["source_equation"])),
    )

    cubic = substitute(parse(fx["source_equation"]), {"F": parse(fx["cubic_source"])})
    cubic_system = split(cubic)
    first_literal = cubic_system.equations[0] == parse(fx["cubic_split"][0])
    all_exact = len(cubic_system) == 4 and all(
        eq == parse(text) for eq, text in zip(cubic_system.equations, fx["cubic_split"])
    )
    b.check(
        "cubic-split",
        "cubic source splits the equation into four exact relations",
        first_literal and all_exact,
    )

    g_binding = {"g": parse(fx["g_ansatz"])}
    h_solved = solve_linear_for(
        substitute(parse(fx["system_k1_p2"][2]), g_binding), "h"
    )
    b.check(
        "h-from-f",
        "eliminating g gives h in terms of f_xx",
        h_solved == parse(fx["h_solution"]),
    )

    relation = substitute(
        parse(fx["system_k1_p2"][1]), {**g_binding, "h": parse(fx["h_solution"])}
    ) * parse("-lambda")
    b.check(
        "f-relation",
        "the remaining equation ties f to f_x and f_xx",
        relation == parse(fx["f_relation"]),
    )
    return b.report()


def residual_check_candidate(f: Expr, g: Expr, h: Expr, lambdas: dict | None = None) -> list:
    """Residuals of the seven k=1, p=2 equations for a concrete (f, g, h).

    All-zero residuals certify that the triple generates a conditional
    symmetry operator d/dt + f d/dx + (gV + h) d/dV of the cubic-source
    equation.
    """
    fx = fixture_json("chain_k1_p2.json")
    bindings: dict = {"f": f, "g": g, "h": h}
    if lambdas:
        bindings.update(lambdas)
    out = []
    for text in list(fx["system_k1_p2"]) + list(fx["cubic_split"]):
        out.append(substitute(parse(text), bindings))
    return out

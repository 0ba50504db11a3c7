"""Determining systems for unit-time-component symmetry operators.

For an evolution equation V_xx = F0(V) V_t + F1(V) V_x + F2(V) and the
operator Q = d/dt + xi(t,x,V) d/dx + eta(t,x,V) d/dV, the invariance
identity is prolonged to second order, V_xx is eliminated through the
equation and V_t through the invariant-surface condition V_t = eta - xi V_x,
and the remaining cubic polynomial identity in V_x is split by powers.
The four coefficient equations are the determining system.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .calculus import Constraint, diff, eq_normalize, substitute
from .errors import DivisionError, OperatorFormError
from .expr import DEFAULT_CONTEXT, Expr
from .parser import parse

# ---------------------------------------------------------------------------
# a minimal jet layer: polynomials in V_t, V_x, V_xx with Expr coefficients

_NEXT_JET = {
    ("Vx", "x"): "Vxx",
    ("Vx", "t"): "Vtx",
    ("Vt", "x"): "Vtx",
    ("Vt", "t"): "Vtt",
}


class JetPoly:
    """Polynomial in jet variables with expression coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict | None = None):
        self.terms = {m: c for m, c in (terms or {}).items() if not c.is_zero()}

    @staticmethod
    def lift(e: Expr) -> "JetPoly":
        return JetPoly({(): e})

    @staticmethod
    def jet(name: str) -> "JetPoly":
        return JetPoly({((name, 1),): Expr.one()})

    def __add__(self, other: "JetPoly") -> "JetPoly":
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out[m] + c if m in out else c
        return JetPoly(out)

    def __neg__(self) -> "JetPoly":
        return JetPoly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "JetPoly") -> "JetPoly":
        return self + (-other)

    def __mul__(self, other: "JetPoly") -> "JetPoly":
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _jet_mul(m1, m2)
                c = c1 * c2
                out[m] = out[m] + c if m in out else c
        return JetPoly(out)

    def total(self, var: str) -> "JetPoly":
        """Total derivative D_t or D_x on the lattice."""
        vjet = "Vt" if var == "t" else "Vx"
        out = JetPoly()
        for m, c in self.terms.items():
            # derivative of the coefficient: partial + V-slope * first jet
            dc = JetPoly({m: diff(c, var)}) + JetPoly(
                {_jet_mul(m, ((vjet, 1),)): diff(c, "V")}
            )
            out = out + dc
            # derivative of the jet monomial, product rule
            for i, (name, power) in enumerate(m):
                nxt = _NEXT_JET[(name, var)]
                factors = list(m)
                if power == 1:
                    del factors[i]
                else:
                    factors[i] = (name, power - 1)
                mono = _jet_mul(tuple(factors), ((nxt, 1),))
                out = out + JetPoly({mono: c.scale(Fraction(power))})
        return out

    def subst_jet(self, name: str, value: "JetPoly") -> "JetPoly":
        out = JetPoly()
        for m, c in self.terms.items():
            rest = tuple(f for f in m if f[0] != name)
            power = sum(p for nm, p in m if nm == name)
            piece = JetPoly({rest: c})
            for _ in range(power):
                piece = piece * value
            out = out + piece
        return out

    def collect_jet(self, name: str) -> dict:
        out: dict = {}
        for m, c in self.terms.items():
            others = [f for f in m if f[0] != name]
            if others:
                raise ValueError(f"unexpected jet variables {others}")
            power = sum(p for nm, p in m if nm == name)
            out[power] = out[power] + c if power in out else c
        return out


def _jet_mul(a: tuple, b: tuple) -> tuple:
    out = dict(a)
    for name, p in b:
        out[name] = out.get(name, 0) + p
    return tuple(sorted((k, v) for k, v in out.items() if v))


# ---------------------------------------------------------------------------
# equations and operators


def _standard_power_assumptions() -> tuple:
    return (
        Constraint.parse("k!=0"),
        Constraint.parse("k!=p"),
        Constraint.parse("k!=p+1"),
        Constraint.parse("p!=-1"),
    )


def _standard_exponential_assumptions() -> tuple:
    return (
        Constraint.parse("n!=0"),
        Constraint.parse("n!=-1"),
    )


@dataclass(frozen=True)
class EvolutionEq:
    """The equation V_xx = F0(V) V_t + F1(V) V_x + F2(V).

    F2 is None for the unknown source term F(V); the power and exponential
    families carry their non-degeneracy assumptions.
    """

    family: str
    F0: Expr
    F1: Expr
    F2: Expr | None = None
    assumptions: tuple = ()
    nonzero_symbols: tuple = ("lambda",)

    @staticmethod
    def power(p=None, k=None, F2: Expr | None = None) -> "EvolutionEq":
        F0 = parse("V^p")
        F1 = parse("-lambda*V^k")
        subs = {}
        if p is not None:
            subs["p"] = p
        if k is not None:
            subs["k"] = k
        if subs:
            F0 = substitute(F0, subs)
            F1 = substitute(F1, subs)
        return EvolutionEq(
            family="power",
            F0=F0,
            F1=F1,
            F2=F2,
            assumptions=_standard_power_assumptions(),
        )

    @staticmethod
    def exponential(n=None, F2: Expr | None = None) -> "EvolutionEq":
        F0 = parse("exp(V)")
        F1 = parse("-lambda*exp((n+1)*V)")
        if n is not None:
            F1 = substitute(F1, {"n": n})
        return EvolutionEq(
            family="exponential",
            F0=F0,
            F1=F1,
            F2=F2,
            assumptions=_standard_exponential_assumptions(),
        )

    @staticmethod
    def concrete(F0: Expr, F1: Expr, F2: Expr) -> "EvolutionEq":
        return EvolutionEq(family="concrete", F0=F0, F1=F1, F2=F2, assumptions=())


@dataclass(frozen=True)
class SymOperator:
    """Operator tau d/dt + xi d/dx + eta d/dV over (t, x, V)."""

    tau: Expr
    xi: Expr
    eta: Expr

    @staticmethod
    def of(tau, xi, eta) -> "SymOperator":
        return SymOperator(_expr(tau), _expr(xi), _expr(eta))

    def is_normalized(self) -> bool:
        return self.tau == Expr.one()


def _expr(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, str):
        return parse(v)
    return Expr.const(v)


def normalize_operator(op: SymOperator) -> SymOperator:
    """Rescale to unit time component: (tau, xi, eta) -> (1, xi/tau, eta/tau)."""
    if op.tau.is_zero():
        raise OperatorFormError(
            "zero time component: operators of the pure d/dx form are "
            "outside the classification scope"
        )
    if op.is_normalized():
        return op
    try:
        inv = op.tau.invert()
    except DivisionError as exc:
        raise OperatorFormError(f"time component is not invertible: {exc}") from None
    return SymOperator(Expr.one(), op.xi * inv, op.eta * inv)


@dataclass(frozen=True)
class DeterminingSystem:
    """The four coefficient equations, ordered by descending V_x power."""

    family: str
    grading: tuple
    equations: tuple

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "grading": list(self.grading),
            "equations": [str(eq) for eq in self.equations],
        }


def generate_determining_system(eq: EvolutionEq) -> DeterminingSystem:
    """Derive the determining system for the generic unit-time operator.

    Each equation is normalized so its leading canonical term has unit
    coefficient, which makes systems directly comparable.
    """
    ctx = DEFAULT_CONTEXT
    xi = Expr.atom(ctx.fn_atom("xi"))
    eta = Expr.atom(ctx.fn_atom("eta"))
    F0, F1 = eq.F0, eq.F1
    if eq.F2 is None:
        F2 = Expr.atom(ctx.fn_atom("F"))
        dF2 = Expr.atom(ctx.fn_atom("F", dV=1))
    else:
        F2 = eq.F2
        dF2 = diff(eq.F2, "V")
    dF0 = diff(F0, "V")
    dF1 = diff(F1, "V")

    Vx = JetPoly.jet("Vx")
    Vt = JetPoly.jet("Vt")
    Vxx = JetPoly.jet("Vxx")
    xi_j = JetPoly.lift(xi)
    eta_j = JetPoly.lift(eta)

    eta_x = eta_j.total("x") - Vx * xi_j.total("x")
    eta_t = eta_j.total("t") - Vx * xi_j.total("t")
    eta_xx = eta_x.total("x") - Vxx * xi_j.total("x")

    invariance = (
        eta_xx
        - JetPoly.lift(dF0 * eta) * Vt
        - JetPoly.lift(F0) * eta_t
        - JetPoly.lift(dF1 * eta) * Vx
        - JetPoly.lift(F1) * eta_x
        - JetPoly.lift(dF2 * eta)
    )
    invariance = invariance.subst_jet(
        "Vxx", JetPoly.lift(F0) * Vt + JetPoly.lift(F1) * Vx + JetPoly.lift(F2)
    )
    invariance = invariance.subst_jet(
        "Vt", JetPoly.lift(eta) - JetPoly.lift(xi) * Vx
    )
    coeffs = invariance.collect_jet("Vx")
    degrees = sorted(coeffs, reverse=True)
    return DeterminingSystem(
        family=eq.family,
        grading=tuple(f"Vx^{d}" for d in degrees),
        equations=tuple(eq_normalize(coeffs[d]) for d in degrees),
    )


def check_operator(eq: EvolutionEq, op: SymOperator) -> list:
    """Substitute an operator into the determining system; return residuals.

    All four residuals vanish exactly when the operator satisfies the
    determining equations identically in (t, x, V).
    """
    if not op.is_normalized():
        raise OperatorFormError(
            "operator must be normalized (unit time component) before checking"
        )
    system = generate_determining_system(eq)
    bindings = {"xi": op.xi, "eta": op.eta}
    return [substitute(e, bindings) for e in system.equations]

"""Concrete-instance verification: pointwise residuals, a finite-difference
solver for the evolution equation, one-parameter group flows, and the
power/log change of state variable.

The symbolic layer does the exact substitution work; this module turns the
results into floating-point evaluations on lattices.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .calculus import substitute
from .determining import EvolutionEq, SymOperator, generate_determining_system
from .errors import (
    EvalPoleError,
    InstabilityError,
    NumericError,
    OverlapError,
    PositivityError,
    UnboundFunctionError,
)
from .expr import Expr
from .parser import parse

_POLE_FLOOR = 1e-300


@dataclass(frozen=True)
class Grid:
    x0: float
    x1: float
    nx: int
    t0: float
    dt: float
    steps: int

    @property
    def dx(self) -> float:
        return (self.x1 - self.x0) / (self.nx - 1)

    def xs(self) -> np.ndarray:
        return np.linspace(self.x0, self.x1, self.nx)


@dataclass
class Field:
    """Samples of V on a uniform (t, x) lattice."""

    t0: float
    dt: float
    x0: float
    dx: float
    values: np.ndarray  # shape (nt, nx), row index is time

    @property
    def nt(self) -> int:
        return self.values.shape[0]

    @property
    def nx(self) -> int:
        return self.values.shape[1]

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.nt)

    def xs(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.nx)

    def copy(self) -> "Field":
        return Field(self.t0, self.dt, self.x0, self.dx, self.values.copy())

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["t", "x", "V"])
        ts = self.times()
        xs = self.xs()
        for i in range(self.nt):
            for j in range(self.nx):
                writer.writerow(
                    [format(ts[i], ".17g"), format(xs[j], ".17g"),
                     format(self.values[i, j], ".17g")]
                )
        return out.getvalue()

    @staticmethod
    def from_csv(text: str) -> "Field":
        rows = list(csv.reader(io.StringIO(text)))
        assert rows[0] == ["t", "x", "V"]
        ts = sorted({float(r[0]) for r in rows[1:]})
        xs = sorted({float(r[1]) for r in rows[1:]})
        values = np.empty((len(ts), len(xs)))
        t_index = {v: i for i, v in enumerate(ts)}
        x_index = {v: j for j, v in enumerate(xs)}
        for r in rows[1:]:
            values[t_index[float(r[0])], x_index[float(r[1])]] = float(r[2])
        return Field(
            ts[0], (ts[-1] - ts[0]) / max(len(ts) - 1, 1),
            xs[0], (xs[-1] - xs[0]) / max(len(xs) - 1, 1),
            values,
        )


@dataclass(frozen=True)
class Instance:
    """A fully concrete equation instance plus a candidate operator."""

    family: str
    p: Fraction
    k: Fraction
    lam: Fraction
    F: Expr
    operator: SymOperator
    grid: Grid
    seed: int
    initial: dict | None = None

    @staticmethod
    def from_json(data: dict) -> "Instance":
        op = data.get("operator", {"tau": "1", "xi": "0", "eta": "0"})
        g = data["grid"]
        return Instance(
            family=data.get("family", "power"),
            p=Fraction(str(data.get("p", data.get("m", 0)))),
            k=Fraction(str(data.get("k", data.get("n", 1)))),
            lam=Fraction(str(data["lambda"])),
            F=parse(str(data.get("F", "0"))),
            operator=SymOperator.of(op["tau"], op["xi"], op["eta"]),
            grid=Grid(
                x0=float(g["x0"]), x1=float(g["x1"]), nx=int(g["nx"]),
                t0=float(g["t0"]), dt=float(g["dt"]), steps=int(g["steps"]),
            ),
            seed=int(data.get("seed", 0)),
            initial=data.get("initial"),
        )

    @staticmethod
    def load(path) -> "Instance":
        with open(path) as fh:
            return Instance.from_json(json.load(fh))

    def param_bindings(self) -> dict:
        return {"p": self.p, "k": self.k, "lambda": self.lam}

    def degeneracies(self) -> list:
        """Family conditions this parameter point violates.

        The determining identities hold for every parameter value, so a
        degenerate point is still verifiable; the list records which
        classification-level conditions it sits on.
        """
        out = []
        if self.lam == 0:
            out.append("lambda = 0")
        if self.k == 0:
            out.append("k = 0")
        if self.k == self.p:
            out.append("k = p")
        if self.k == self.p + 1:
            out.append("k = p + 1")
        return out

    def assumptions_hold(self) -> bool:
        return not self.degeneracies()

    def equation(self) -> EvolutionEq:
        return EvolutionEq.power(p=self.p, k=self.k, F2=self.F)


# ---------------------------------------------------------------------------
# pointwise evaluation


def _compile_pointwise(e: Expr):
    """Compile a fully substituted expression to a float function of (t, x, V).

    The expression may contain only coefficient monomials in t, x, constant
    V powers and constant exponential slopes.
    """
    compiled = []
    for term in e.terms:
        if term.fns:
            raise UnboundFunctionError(
                f"unbound function atom {term.fns[0].base_text()}"
            )
        if not term.vpow.is_const() or not term.expc.is_const():
            raise UnboundFunctionError(
                "exponents still carry parameters; bind p, k, n first"
            )
        num = [(float(c), dict(m).get("t", 0), dict(m).get("x", 0))
               for m, c in term.coeff.num.terms.items()]
        den = [(float(c), dict(m).get("t", 0), dict(m).get("x", 0))
               for m, c in term.coeff.den.terms.items()]
        for mono in list(term.coeff.num.terms) + list(term.coeff.den.terms):
            extra = set(dict(mono)) - {"t", "x"}
            if extra:
                raise UnboundFunctionError(f"unbound symbols {sorted(extra)}")
        compiled.append(
            (num, den, float(term.vpow.c0), float(term.expc.c0))
        )

    def evaluate(t: float, x: float, V: float) -> float:
        total = 0.0
        for num, den, vexp, cexp in compiled:
            n = sum(c * t**i * x**j for c, i, j in num)
            d = sum(c * t**i * x**j for c, i, j in den)
            if abs(d) < _POLE_FLOOR:
                raise EvalPoleError(f"denominator ~ 0 at (t={t}, x={x})")
            value = n / d
            if vexp:
                value *= V**vexp
            if cexp:
                value *= math.exp(cexp * V)
            total += value
        if not math.isfinite(total):
            raise EvalPoleError(f"non-finite value at (t={t}, x={x}, V={V})")
        return total

    return evaluate


def eval_expr(e: Expr, point: dict, inst: Instance) -> float:
    """Exact symbolic substitution of the instance, then float evaluation."""
    bindings = {
        "xi": inst.operator.xi,
        "eta": inst.operator.eta,
        "F": inst.F,
        **inst.param_bindings(),
    }
    bound = substitute(e, bindings)
    fn = _compile_pointwise(bound)
    return fn(point["t"], point["x"], point["V"])


def sample_residuals(inst: Instance, op: SymOperator, N: int, seed: int) -> float:
    """Max absolute determining-equation residual over N seeded sample points.

    Points are drawn uniformly from [0.1, 2]^3, a box clear of the V = 0
    and 2kt + A1 = 0 poles.
    """
    if N < 1:
        raise ValueError("need at least one sample point")
    if inst.family != "power":
        raise NumericError(f"only power-family instances are supported, "
                           f"got {inst.family!r}")
    system = generate_determining_system(
        EvolutionEq.power(F2=None)
    )
    bindings = {
        "xi": op.xi,
        "eta": op.eta,
        "F": inst.F,
        **inst.param_bindings(),
    }
    compiled = [
        _compile_pointwise(substitute(eq, bindings)) for eq in system.equations
    ]
    rng = np.random.default_rng(seed)
    worst = 0.0
    produced = 0
    attempts = 0
    while produced < N:
        if attempts >= 10 * N:
            raise EvalPoleError("too many pole rejections while sampling")
        attempts += 1
        t, x, V = rng.uniform(0.1, 2.0, size=3)
        try:
            vals = [abs(fn(t, x, V)) for fn in compiled]
        except EvalPoleError:
            continue
        produced += 1
        worst = max(worst, *vals)
    return worst


# ---------------------------------------------------------------------------
# finite-difference solver


def _compile_source(inst: Instance):
    bound = substitute(inst.F, inst.param_bindings())
    terms = []
    for t in bound.terms:
        if t.fns or t.coeff.gens() or not t.vpow.is_const() or not t.expc.is_const():
            raise UnboundFunctionError("source term must be a concrete function of V")
        terms.append(
            (float(t.coeff.const_value()), float(t.vpow.c0), float(t.expc.c0))
        )

    def F(V: np.ndarray) -> np.ndarray:
        out = np.zeros_like(V)
        for c, vexp, cexp in terms:
            piece = np.full_like(V, c)
            if vexp:
                piece = piece * V**vexp
            if cexp:
                piece = piece * np.exp(cexp * V)
            out = out + piece
        return out

    return F


def initial_row(inst: Instance) -> np.ndarray:
    """Build the initial data described by the instance file."""
    xs = inst.grid.xs()
    desc = inst.initial or {"type": "constant", "value": 1.0}
    kind = desc.get("type", "constant")
    if kind == "constant":
        return np.full_like(xs, float(desc.get("value", 1.0)))
    if kind == "linear":
        return float(desc.get("slope", 1.0)) * xs + float(desc.get("offset", 0.0))
    if kind == "gaussian":
        c = float(desc.get("center", 0.5 * (xs[0] + xs[-1])))
        w = float(desc.get("width", 1.0))
        a = float(desc.get("amplitude", 1.0))
        return a * np.exp(-(((xs - c) / w) ** 2))
    raise ValueError(f"unknown initial data type {kind!r}")


def solve_pde(
    inst: Instance,
    initial: np.ndarray,
    steps: int,
    boundary=None,
) -> Field:
    """Method-of-lines integration of V_t = (V_xx + lam V^k V_x - F(V)) / V^p.

    Second-order central differences in x, classical fourth-order
    Runge-Kutta in t, Dirichlet boundaries held at the initial end values
    unless a boundary callable t -> (left, right) is supplied.
    """
    if inst.family != "power":
        raise NumericError(f"only power-family instances are supported, "
                           f"got {inst.family!r}")
    g = inst.grid
    dx = g.dx
    p = float(inst.p)
    k = float(inst.k)
    lam = float(inst.lam)
    needs_positive = (
        p < 0 or k < 0 or Fraction(inst.p).denominator != 1
        or Fraction(inst.k).denominator != 1
    )
    F = _compile_source(inst)
    row = np.asarray(initial, dtype=float).copy()
    if row.shape != (g.nx,):
        raise ValueError(f"initial row must have {g.nx} points")

    def check_row(r: np.ndarray):
        if needs_positive and np.any(r <= 0):
            raise PositivityError("V must stay positive for this instance")
        if np.any(np.abs(r) > 1e6) or not np.all(np.isfinite(r)):
            raise InstabilityError("solution magnitude exceeded 1e6")

    def stability_bound(r: np.ndarray) -> float:
        vp = r**p if p else np.ones_like(r)
        return 0.4 * dx * dx * float(np.min(vp))

    def rhs(r: np.ndarray) -> np.ndarray:
        out = np.zeros_like(r)
        vxx = (r[2:] - 2 * r[1:-1] + r[:-2]) / (dx * dx)
        vx = (r[2:] - r[:-2]) / (2 * dx)
        mid = r[1:-1]
        conv = lam * mid**k * vx if k else lam * vx
        source = F(mid)
        vp = mid**p if p else 1.0
        out[1:-1] = (vxx + conv - source) / vp
        return out

    def bc(time: float) -> tuple:
        if boundary is None:
            return float(initial[0]), float(initial[-1])
        return boundary(time)

    check_row(row)
    if inst.grid.dt > stability_bound(row) * (1 + 1e-12):
        raise InstabilityError(
            f"dt={g.dt} violates the bound 0.4*dx^2*min(V^p)={stability_bound(row):.3e}"
        )
    rows = [row.copy()]
    t = g.t0
    for _ in range(steps):
        def stage(base: np.ndarray, scale: float, kk: np.ndarray, time: float):
            r = base + scale * kk
            left, right = bc(time)
            r[0], r[-1] = left, right
            return r

        k1 = rhs(row)
        k2 = rhs(stage(row, g.dt / 2, k1, t + g.dt / 2))
        k3 = rhs(stage(row, g.dt / 2, k2, t + g.dt / 2))
        k4 = rhs(stage(row, g.dt, k3, t + g.dt))
        row = row + (g.dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        t += g.dt
        left, right = bc(t)
        row[0], row[-1] = left, right
        check_row(row)
        rows.append(row.copy())
    return Field(g.t0, g.dt, g.x0, dx, np.array(rows))


def invariance_residual(field: Field, inst: Instance) -> float:
    """Max |V_xx - V^p V_t + lam V^k V_x - F(V)| over interior lattice points."""
    if field.nt < 3 or field.nx < 3:
        raise ValueError("need at least a 3x3 field")
    V = field.values
    p = float(inst.p)
    k = float(inst.k)
    lam = float(inst.lam)
    F = _compile_source(inst)
    mid = V[1:-1, 1:-1]
    vt = (V[2:, 1:-1] - V[:-2, 1:-1]) / (2 * field.dt)
    vx = (V[1:-1, 2:] - V[1:-1, :-2]) / (2 * field.dx)
    vxx = (V[1:-1, 2:] - 2 * mid + V[1:-1, :-2]) / (field.dx**2)
    vp = mid**p if p else 1.0
    vk = mid**k if k else 1.0
    res = vxx - vp * vt + lam * vk * vx - F(mid)
    return float(np.max(np.abs(res)))


# ---------------------------------------------------------------------------
# one-parameter group flow


@dataclass(frozen=True)
class ScalingFlow:
    """Flow of (2kt+A1) d/dt + (kx+A2) d/dx - w V d/dV.

    The symmetry generator has weight w = 1; other weights provide
    deliberately broken flows for negative controls.
    """

    A1: float = 1.0
    A2: float = 0.0
    v_weight: float = 1.0

    def map_t(self, t, k: float, eps: float):
        return (math.exp(2 * k * eps) * (2 * k * t + self.A1) - self.A1) / (2 * k)

    def map_x(self, x, k: float, eps: float):
        return (math.exp(k * eps) * (k * x + self.A2) - self.A2) / k

    def inverse_t(self, t, k: float, eps: float):
        return self.map_t(t, k, -eps)

    def inverse_x(self, x, k: float, eps: float):
        return self.map_x(x, k, -eps)


def group_transform(
    field: Field,
    generator: ScalingFlow,
    epsilon: float,
    inst: Instance,
    onto: Field | None = None,
) -> Field:
    """Apply the one-parameter flow to a solution field.

    Default: the lattice is carried along exactly (the flow is affine in
    each coordinate, so the image of a uniform lattice is uniform) and the
    values are scaled by exp(-w*eps); no interpolation error enters.

    With ``onto``, the result is resampled onto that field's lattice by
    bilinear interpolation of the inverse-flow preimages; lattice points
    whose preimage falls outside the source domain are clipped away and the
    retained fraction is reported on the returned field as ``coverage``.
    """
    if epsilon == 0 and onto is None:
        return field.copy()
    k = float(inst.k)
    scale = math.exp(-generator.v_weight * epsilon)
    if onto is None:
        return Field(
            t0=generator.map_t(field.t0, k, epsilon),
            dt=math.exp(2 * k * epsilon) * field.dt,
            x0=generator.map_x(field.x0, k, epsilon),
            dx=math.exp(k * epsilon) * field.dx,
            values=scale * field.values,
        )
    # pull back onto the requested lattice
    ts = onto.times()
    xs = onto.xs()
    src_t = np.array([generator.inverse_t(tv, k, epsilon) for tv in ts])
    src_x = np.array([generator.inverse_x(xv, k, epsilon) for xv in xs])
    t_lo, t_hi = field.t0, field.t0 + field.dt * (field.nt - 1)
    x_lo, x_hi = field.x0, field.x0 + field.dx * (field.nx - 1)
    pad = 1e-12
    t_ok = (src_t >= t_lo - pad) & (src_t <= t_hi + pad)
    x_ok = (src_x >= x_lo - pad) & (src_x <= x_hi + pad)
    if not np.any(t_ok) or not np.any(x_ok):
        raise OverlapError("transformed lattice has no overlap with the source")
    ti = np.where(t_ok)[0]
    xi = np.where(x_ok)[0]
    coverage = (len(ti) * len(xi)) / (len(ts) * len(xs))
    out = np.empty((len(ti), len(xi)))
    for a, i in enumerate(ti):
        ft = min(max((src_t[i] - field.t0) / field.dt, 0.0), field.nt - 1.0)
        i0 = min(int(ft), field.nt - 2)
        wt = ft - i0
        for b, j in enumerate(xi):
            fxp = min(max((src_x[j] - field.x0) / field.dx, 0.0), field.nx - 1.0)
            j0 = min(int(fxp), field.nx - 2)
            wx = fxp - j0
            v00 = field.values[i0, j0]
            v01 = field.values[i0, j0 + 1]
            v10 = field.values[i0 + 1, j0]
            v11 = field.values[i0 + 1, j0 + 1]
            out[a, b] = scale * (
                (1 - wt) * ((1 - wx) * v00 + wx * v01)
                + wt * ((1 - wx) * v10 + wx * v11)
            )
    result = Field(ts[ti[0]], onto.dt, xs[xi[0]], onto.dx, out)
    result.coverage = coverage  # type: ignore[attr-defined]
    return result


# ---------------------------------------------------------------------------
# the power/log change of state variable


def substitute_power_log(direction: str, m: float, value):
    """Change of state variable V = U^(m+1) (or ln U at m = -1) and back.

    Accepts floats or arrays; raises on nonpositive inputs where a
    logarithm or fractional power requires positivity.
    """
    arr = np.asarray(value, dtype=float)
    if direction == "u_to_v":
        if m == -1:
            if np.any(arr <= 0):
                raise PositivityError("U must be positive for the log branch")
            out = np.log(arr)
        else:
            e = m + 1
            if e != int(e) or e < 0:
                _require_positive(arr, "U")
            out = np.power(arr, e)
    elif direction == "v_to_u":
        if m == -1:
            out = np.exp(arr)
        else:
            e = 1.0 / (m + 1)
            if e != int(e):
                _require_positive(arr, "V")
            out = np.power(arr, e)
    else:
        raise ValueError("direction must be 'u_to_v' or 'v_to_u'")
    if np.ndim(value) == 0:
        return float(out)
    return out


def _require_positive(arr: np.ndarray, name: str):
    if np.any(arr <= 0):
        raise PositivityError(f"{name} must be positive for fractional powers")

"""Numeric verification: evaluation, sampling, solving, flows, substitution."""
import math
from fractions import Fraction

import numpy as np
import pytest

from qcsym.classify import fixture_json, fixture_text
from qcsym.determining import SymOperator, normalize_operator
from qcsym.errors import (
    EvalPoleError,
    InstabilityError,
    OverlapError,
    PositivityError,
    UnboundFunctionError,
)
from qcsym.numeric import (
    Field,
    Instance,
    ScalingFlow,
    eval_expr,
    group_transform,
    initial_row,
    invariance_residual,
    sample_residuals,
    solve_pde,
    substitute_power_log,
)
from qcsym.parser import parse


def scaling_instance() -> Instance:
    return Instance.from_json(fixture_json("instance_scaling.json"))


def simple_instance(p=0, k=1, lam=1, F="0", grid=None, initial=None) -> Instance:
    return Instance.from_json(
        {
            "family": "power",
            "p": p,
            "k": k,
            "lambda": lam,
            "F": F,
            "operator": {"tau": "1", "xi": "0", "eta": "0"},
            "grid": grid
            or {"x0": 0.0, "x1": 1.0, "nx": 21, "t0": 0.0, "dt": 0.0004, "steps": 50},
            "initial": initial,
            "seed": 0,
        }
    )


# ---------------------------------------------------------------------------
# pointwise evaluation


def test_eval_power():
    inst = simple_instance(p=1, k=2)
    assert eval_expr(parse("V^(2*p+3)"), {"t": 0, "x": 0, "V": 2.0}, inst) == 32.0


def test_eval_operator_component():
    inst = scaling_instance()
    assert eval_expr(parse("xi"), {"t": 0.0, "x": 3.0, "V": 1.0}, inst) == 3.0


def test_eval_rejects_unbound_and_poles():
    inst = simple_instance()
    with pytest.raises(UnboundFunctionError):
        eval_expr(parse("a_t"), {"t": 0, "x": 0, "V": 1.0}, inst)
    with pytest.raises(EvalPoleError):
        eval_expr(parse("1/(2*t+1)") * parse("V"), {"t": -0.5, "x": 0, "V": 1.0},
                  scaling_instance())


def _interval_mul(a, b):
    products = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
    lo, hi = min(products), max(products)
    return (math.nextafter(lo, -math.inf), math.nextafter(hi, math.inf))


def _interval_add(a, b):
    return (
        math.nextafter(a[0] + b[0], -math.inf),
        math.nextafter(a[1] + b[1], math.inf),
    )


def test_eval_source_term_within_interval_bounds():
    # interval-arithmetic oracle: evaluate the extracted source term
    # term by term with outward rounding and require enclosure
    inst = Instance.from_json(
        {
            "family": "power", "p": 3, "k": 5, "lambda": Fraction(1, 2),
            "F": "0", "operator": {"tau": "1", "xi": "0", "eta": "0"},
            "grid": {"x0": 0, "x1": 1, "nx": 3, "t0": 0, "dt": 1e-4, "steps": 1},
            "seed": 0,
        }
    )
    from qcsym.calculus import substitute

    e = parse(fixture_text("source_case_b.txt"))
    bound = substitute(
        e,
        {
            "a": 2, "f": 3, "g": Fraction(1, 2), "h": 1,
            "p": 3, "k": 5, "lambda": Fraction(1, 2),
        },
    )
    t, x, V = 0.7, 0.3, 1.3
    total = (0.0, 0.0)
    for term in bound.terms:
        c = term.coeff.eval({"t": Fraction(7, 10), "x": Fraction(3, 10)})
        iv = (math.nextafter(float(c), -math.inf), math.nextafter(float(c), math.inf))
        vexp = float(term.vpow.c0)
        pw = V ** vexp
        iv = _interval_mul(iv, (math.nextafter(pw, -math.inf), math.nextafter(pw, math.inf)))
        total = _interval_add(total, iv)
    got = eval_expr(
        bound, {"t": t, "x": x, "V": V},
        inst,
    )
    assert total[0] - 1e-9 <= got <= total[1] + 1e-9
    assert math.isfinite(got)


# ---------------------------------------------------------------------------
# sampled residuals


def test_sampled_residuals_symmetry_and_perturbation():
    inst = scaling_instance()
    op = normalize_operator(inst.operator)
    worst = sample_residuals(inst, op, 1000, seed=7)
    assert worst < 1e-9
    bad = SymOperator(op.tau, op.xi, op.eta + parse("1/10*V^2"))
    assert sample_residuals(inst, bad, 200, seed=7) > 1e-3


def test_sampled_residuals_translation_exactly_zero():
    inst = Instance.from_json(
        {
            "family": "power", "p": 0, "k": 1, "lambda": 1, "F": "0",
            "operator": {"tau": "1", "xi": "1", "eta": "0"},
            "grid": {"x0": 0, "x1": 1, "nx": 3, "t0": 0, "dt": 1e-4, "steps": 1},
            "seed": 3,
        }
    )
    op = normalize_operator(inst.operator)
    assert sample_residuals(inst, op, 1000, seed=5) == 0.0


def test_sampled_residuals_deterministic():
    inst = scaling_instance()
    op = normalize_operator(inst.operator)
    bad = SymOperator(op.tau, op.xi, op.eta + parse("1/10*V^2"))
    a = sample_residuals(inst, bad, 100, seed=42)
    b = sample_residuals(inst, bad, 100, seed=42)
    assert a == b


def test_instance_degeneracies_reported():
    inst = scaling_instance()
    assert inst.degeneracies() == ["k = p + 1"]
    assert not inst.assumptions_hold()
    clean = simple_instance(p=0, k=2)
    assert clean.assumptions_hold()


# ---------------------------------------------------------------------------
# solver


def test_constant_solution_stays_constant():
    inst = simple_instance()
    row = np.full(21, 0.7)
    field = solve_pde(inst, row, 50)
    assert float(np.max(np.abs(field.values - 0.7))) == 0.0
    assert invariance_residual(field, inst) == 0.0


def test_zero_steps_returns_initial_row():
    inst = simple_instance()
    row = np.linspace(0.0, 1.0, 21)
    field = solve_pde(inst, row, 0)
    assert field.values.shape == (1, 21)
    assert np.array_equal(field.values[0], row)


def test_stability_guard():
    inst = simple_instance(
        grid={"x0": 0.0, "x1": 1.0, "nx": 21, "t0": 0.0, "dt": 0.1, "steps": 5}
    )
    with pytest.raises(InstabilityError):
        solve_pde(inst, np.full(21, 1.0), 5)


def test_positivity_guard():
    inst = simple_instance(p=-1, k=1)
    with pytest.raises(PositivityError):
        solve_pde(inst, np.linspace(-1.0, 1.0, 21), 5)


def test_exact_feed_convergence_order():
    # V = x/(1-t) solves V_t = V_xx + V V_x; halving dx (dt ~ dx^2)
    # must shrink the discrete residual by at least 3.5
    def run(nx):
        dx = 1.0 / (nx - 1)
        dt = 0.4 * dx * dx
        steps = int(round(0.1 / dt))
        inst = simple_instance(
            grid={"x0": 0.0, "x1": 1.0, "nx": nx, "t0": 0.0, "dt": dt,
                  "steps": steps}
        )
        xs = inst.grid.xs()
        field = solve_pde(
            inst, xs.copy(), steps,
            boundary=lambda t: (0.0, 1.0 / (1.0 - t)),
        )
        return invariance_residual(field, inst)

    coarse, fine = run(51), run(101)
    assert coarse / fine >= 3.5
    assert math.log2(coarse / fine) >= 1.9  # observed order in dx


def test_residual_of_noise_is_large():
    inst = simple_instance()
    rng = np.random.default_rng(0)
    field = Field(0.0, 1e-4, 0.0, 0.05, 0.5 + 0.01 * rng.standard_normal((9, 21)))
    assert invariance_residual(field, inst) > 1.0


def test_csv_round_trip():
    inst = simple_instance()
    field = solve_pde(inst, np.linspace(0.3, 1.0, 21), 3)
    text = field.to_csv()
    assert text.splitlines()[0] == "t,x,V"
    back = Field.from_csv(text)
    assert np.allclose(back.values, field.values, rtol=0, atol=0)
    assert back.nt == field.nt and back.nx == field.nx


# ---------------------------------------------------------------------------
# group flow


def test_flow_identity_is_bit_exact():
    inst = scaling_instance()
    field = solve_pde(inst, initial_row(inst), 40)
    moved = group_transform(field, ScalingFlow(), 0.0, inst)
    assert np.array_equal(moved.values, field.values)
    assert (moved.t0, moved.dt, moved.x0, moved.dx) == (
        field.t0, field.dt, field.x0, field.dx,
    )


def test_flow_composition():
    inst = scaling_instance()
    field = solve_pde(inst, initial_row(inst), 40)
    flow = ScalingFlow()
    once = group_transform(
        group_transform(field, flow, 0.05, inst), flow, 0.07, inst
    )
    direct = group_transform(field, flow, 0.12, inst)
    assert float(np.max(np.abs(once.values - direct.values))) < 1e-6
    assert abs(once.t0 - direct.t0) < 1e-9
    assert abs(once.dx - direct.dx) < 1e-12


def test_flow_preserves_solutions_and_detects_wrong_weight():
    inst = scaling_instance()
    field = solve_pde(inst, initial_row(inst), inst.grid.steps)
    base = invariance_residual(field, inst)
    moved = group_transform(field, ScalingFlow(), 0.1, inst)
    assert invariance_residual(moved, inst) <= 5.0 * base
    broken = group_transform(field, ScalingFlow(v_weight=2.0), 0.2, inst)
    assert invariance_residual(broken, inst) >= 10.0 * base


def test_flow_resample_clips_and_reports_coverage():
    inst = scaling_instance()
    field = solve_pde(inst, initial_row(inst), inst.grid.steps)
    moved = group_transform(field, ScalingFlow(), 0.1, inst, onto=field)
    assert 0.0 < moved.coverage < 1.0
    assert moved.nt < field.nt  # early rows have preimages before t0
    assert moved.nx == field.nx  # x preimages stay inside for A2 = 0


def test_flow_resample_identity_recovers_values():
    inst = scaling_instance()
    field = solve_pde(inst, initial_row(inst), 30)
    back = group_transform(field, ScalingFlow(), 0.0, inst, onto=field)
    assert back.coverage == 1.0
    assert np.allclose(back.values, field.values, atol=1e-12)


def test_flow_empty_overlap():
    inst = scaling_instance()
    field = solve_pde(inst, initial_row(inst), 10)
    with pytest.raises(OverlapError):
        group_transform(field, ScalingFlow(), 5.0, inst, onto=field)


# ---------------------------------------------------------------------------
# the power/log state substitution


def test_substitution_values():
    assert substitute_power_log("u_to_v", 1, 3.0) == 9.0
    assert abs(substitute_power_log("u_to_v", -1, math.e) - 1.0) < 1e-15


def test_substitution_round_trips():
    rng = np.random.default_rng(11)
    U = rng.uniform(0.1, 10.0, size=(30, 30))
    for m in (-1, 1, 2):
        V = substitute_power_log("u_to_v", m, U)
        U2 = substitute_power_log("v_to_u", m, V)
        assert float(np.max(np.abs(U2 - U))) < 1e-12


def test_substitution_domain_errors():
    with pytest.raises(PositivityError):
        substitute_power_log("u_to_v", -1, -1.0)
    with pytest.raises(PositivityError):
        substitute_power_log("v_to_u", 1, np.array([-4.0, 1.0]))
    with pytest.raises(ValueError):
        substitute_power_log("sideways", 1, 1.0)


def test_eval_matches_exact_rational_oracle():
    # independent re-evaluation: push exact rationals through the symbolic
    # layer and compare the float pipeline against the exact value
    from qcsym.calculus import substitute

    inst = simple_instance(p=3, k=5, lam=1)
    e = parse(fixture_text("source_case_b.txt"))
    bindings = {
        "a": 2, "f": 3, "g": Fraction(1, 2), "h": 1,
        "p": 3, "k": 5, "lambda": 1,
    }
    bound = substitute(e, bindings)
    t, x, V = Fraction(7, 10), Fraction(3, 10), Fraction(5, 4)
    exact = Fraction(0)
    for term in bound.terms:
        assert not term.fns
        c = term.coeff.eval({"t": t, "x": x})
        exact += c * V ** int(term.vpow.c0) if term.vpow.c0.denominator == 1 else c
    got = eval_expr(bound, {"t": float(t), "x": float(x), "V": float(V)}, inst)
    assert abs(got - float(exact)) <= 1e-12 * max(1.0, abs(float(exact)))


def test_flow_inverse_consistency_with_offsets():
    flow = ScalingFlow(A1=2.0, A2=1.5)
    for k in (1.0, 2.0, 0.5):
        for eps in (0.05, 0.3):
            for v in (0.0, 0.7, 3.2):
                assert abs(flow.inverse_t(flow.map_t(v, k, eps), k, eps) - v) < 1e-12
                assert abs(flow.inverse_x(flow.map_x(v, k, eps), k, eps) - v) < 1e-12


def test_blowup_detected():
    # V_t = V_xx + V V_x + 2 V^3 from a large uniform state blows up in
    # finite time and must be caught by the magnitude guard
    inst = simple_instance(
        F="-2*V^3",
        grid={"x0": 0.0, "x1": 1.0, "nx": 21, "t0": 0.0, "dt": 0.001,
              "steps": 60},
    )
    with pytest.raises(InstabilityError):
        solve_pde(inst, np.full(21, 10.0), 60)

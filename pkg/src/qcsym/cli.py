"""Command-line interface: derivation, enumeration, verification, and the
one-shot reproduction suite."""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import classify, numeric
from .calculus import Constraint, split, substitute
from .determining import EvolutionEq, SymOperator, check_operator, generate_determining_system, normalize_operator
from .errors import NumericError, TermLanguageError
from .parser import parse, parse_affine

_CHECK_TOL = 1e-9


def _build_argparser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="qcsym",
        description="Symmetry-classification workbench for "
        "reaction-diffusion-convection equations",
        allow_abbrev=False,
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("derive", help="derive a determining system", allow_abbrev=False)
    p.add_argument("--family", choices=("power", "exp"), default="power")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser(
        "coincide", help="enumerate exponent-coincidence cases", allow_abbrev=False
    )
    p.add_argument("--exponents", help="comma-separated affine exponents")
    p.add_argument("--target", action="append", help="target exponent (repeatable)")
    p.add_argument("--forbidden", help="comma-separated excluded relations")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("table", help="coincidence table for a case", allow_abbrev=False)
    p.add_argument("--case", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser(
        "check-op", help="check an operator against the determining system",
        allow_abbrev=False,
    )
    p.add_argument("--family", choices=("power", "exp"), default="power")
    p.add_argument("--tau", default="1")
    p.add_argument("--xi", required=True)
    p.add_argument("--eta", required=True)
    p.add_argument("--equation", help="instance JSON file supplying p, k, lambda, F")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser(
        "check-op-numeric", help="sample determining residuals numerically",
        allow_abbrev=False,
    )
    p.add_argument("--equation", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser(
        "split", help="split an expression by graded atoms", allow_abbrev=False
    )
    p.add_argument("expression")
    p.add_argument("--forbidden", help="comma-separated excluded relations")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser(
        "transform", help="solve an instance and apply the scaling flow",
        allow_abbrev=False,
    )
    p.add_argument("--equation", required=True)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--out", help="write the transformed field CSV here")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser(
        "verify-paper", help="run the full reproduction suite", allow_abbrev=False
    )
    p.add_argument("--json", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--keep-going", action="store_true")
    p.add_argument(
        "--corrupt",
        help="test hook: corrupt the named step's fixture to force a failure",
    )
    return ap


def _parse_constraints(text: str | None) -> tuple:
    if not text:
        return ()
    return tuple(Constraint.parse(part, "forbidden") for part in text.split(","))


def _emit(payload, as_json: bool, lines) -> None:
    if as_json:
        sys.stdout.write(json.dumps(payload, indent=2) + "\n")
    else:
        for line in lines:
            sys.stdout.write(line + "\n")


def _cmd_derive(args) -> int:
    family = "power" if args.family == "power" else "exponential"
    eq = EvolutionEq.power() if family == "power" else EvolutionEq.exponential()
    system = generate_determining_system(eq)
    lines = [f"determining system ({family} family)"]
    for g, e in zip(system.grading, system.equations):
        lines.append(f"  {g:<5} : {e}")
    _emit(system.to_json(), args.json, lines)
    return 0


def _cmd_coincide(args) -> int:
    forbidden = _parse_constraints(args.forbidden)
    if args.exponents:
        exponents = [parse_affine(t) for t in args.exponents.split(",")]
        targets = [parse_affine(t) for t in args.target] if args.target else None
        cases = classify.enumerate_special_cases(exponents, targets, forbidden)
    else:
        cases = classify.fifteen_power_cases()
    payload = [str(c) for c in cases]
    lines = [f"{len(cases)} coincidence cases"] + [f"  {c}" for c in payload]
    _emit(payload, args.json, lines)
    return 0


def _cmd_table(args) -> int:
    case = Constraint.parse(args.case)
    target = parse_affine(args.target)
    tables = {
        str(t.target): t for t in classify.coincidence_tables_k_eq_p_minus_1()
    }
    key = str(target)
    if str(case) == "k=p-1" and key in tables:
        table = tables[key]
    else:
        raise TermLanguageError(
            f"no catalogued table for case {case} and target {target}"
        )
    lines = [f"case {case}, target {table.target}"]
    header = "  column | " + "  ".join(f"{str(c):>6}" for c in table.columns)
    values = "  value  | " + "  ".join(f"{v:>6}" for v in table.value_strings())
    lines += [header, values]
    excl = [str(c) for c, x in zip(table.columns, table.excluded) if x]
    if excl:
        lines.append("  excluded by the standing conditions: " + ", ".join(excl))
    _emit(table.to_json(), args.json, lines)
    return 0


def _cmd_check_op(args) -> int:
    op = normalize_operator(SymOperator.of(args.tau, args.xi, args.eta))
    if args.equation:
        inst = numeric.Instance.load(args.equation)
        eq = inst.equation()
    else:
        eq = EvolutionEq.power() if args.family == "power" else EvolutionEq.exponential()
    residuals = check_operator(eq, op)
    ok = all(r.is_zero() for r in residuals)
    payload = {
        "satisfied": ok,
        "residuals": [str(r) for r in residuals],
    }
    lines = [f"operator {'satisfies' if ok else 'violates'} the determining system"]
    for g, r in zip(("Vx^3", "Vx^2", "Vx^1", "Vx^0"), residuals):
        lines.append(f"  {g:<5} residual: {r}")
    _emit(payload, args.json, lines)
    return 0 if ok else 1


def _cmd_check_op_numeric(args) -> int:
    inst = numeric.Instance.load(args.equation)
    seed = inst.seed if args.seed is None else args.seed
    op = normalize_operator(inst.operator)
    worst = numeric.sample_residuals(inst, op, args.samples, seed)
    ok = worst < _CHECK_TOL
    payload = {"max_residual": worst, "samples": args.samples, "seed": seed,
               "satisfied": ok}
    _emit(
        payload, args.json,
        [f"max residual over {args.samples} points (seed {seed}): {worst:.3e}",
         "within tolerance" if ok else "exceeds tolerance"],
    )
    return 0 if ok else 1


def _cmd_split(args) -> int:
    e = parse(args.expression)
    system = split(e, _parse_constraints(args.forbidden))
    payload = {
        "grading": [str(k) for k in system.grading],
        "equations": system.to_json(),
    }
    lines = [f"{len(system)} equations"]
    for k, eq in zip(system.grading, system.equations):
        lines.append(f"  {str(k):<10} : {eq}")
    _emit(payload, args.json, lines)
    return 0


def _cmd_transform(args) -> int:
    inst = numeric.Instance.load(args.equation)
    field = numeric.solve_pde(inst, numeric.initial_row(inst), inst.grid.steps)
    base = numeric.invariance_residual(field, inst)
    flow = numeric.ScalingFlow(A1=1.0, A2=0.0)
    moved = numeric.group_transform(field, flow, args.eps, inst)
    res = numeric.invariance_residual(moved, inst)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(moved.to_csv())
    payload = {
        "epsilon": args.eps,
        "baseline_residual": base,
        "transformed_residual": res,
        "ratio": res / base if base else float("inf"),
    }
    _emit(
        payload, args.json,
        [f"baseline residual   : {base:.3e}",
         f"transformed residual: {res:.3e} (eps = {args.eps})",
         f"ratio               : {payload['ratio']:.2f}"],
    )
    return 0


# ---------------------------------------------------------------------------
# the reproduction suite


def _suite_steps(seed: int, corrupt: str | None):
    """Yield (id, description, callable) for the fourteen suite steps."""

    def regeneration():
        for family, name in (
            ("power", "determining_power.json"),
            ("exponential", "determining_exponential.json"),
        ):
            eq = EvolutionEq.power() if family == "power" else EvolutionEq.exponential()
            system = generate_determining_system(eq)
            from .calculus import eq_normalize

            fixture = classify.fixture_json(name)["equations"]
            if corrupt == "determining-systems":
                fixture = list(fixture)
                fixture[0] = fixture[0] + " + V^p"
            if len(system.equations) != 4:
                return False, f"{family}: expected 4 equations"
            for got, text in zip(system.equations, fixture):
                if got != eq_normalize(parse(text)):
                    return False, f"{family}: mismatch against {text!r}"
        return True, "both families regenerate their catalogued systems"

    def eta_solution():
        eta = classify.solve_eta_case_b()
        if eta != parse(classify.fixture_text("eta_case_b.txt")):
            return False, "closed form differs"
        eq2 = classify.power_system().equations[1]
        residual = substitute(eq2, {"xi": parse("a*V + f"), "eta": eta})
        return residual.is_zero(), "back-substitution residual is zero"

    def source_extraction():
        F = classify.extract_F()
        if F != parse(classify.fixture_text("source_case_b.txt")):
            return False, "closed form differs"
        eq3 = classify.power_system().equations[2]
        residual = substitute(
            eq3, {"xi": parse("a*V + f"), "eta": classify.solve_eta_case_b(), "F": F}
        )
        return residual.is_zero(), "extraction and back-substitution verified"

    def six_cases():
        got = {str(c) for c in classify.six_power_cases()}
        want = set(classify.fixture_json("coincidence_six.json")["cases"])
        return got == want, f"{len(got)} cases"

    def fifteen_cases():
        got = [str(c) for c in classify.fifteen_power_cases()]
        want = [
            str(Constraint.parse(c))
            for c in classify.fixture_json("coincidence_fifteen.json")["cases"]
        ]
        return got == want, f"{len(got)} cases in catalogued order"

    def fifteen_list():
        got = [str(a) for a in classify.fifteen_powers_k_eq_p_minus_1()]
        want = [
            str(parse_affine(t))
            for t in classify.fixture_json("powers_fifteen_k_eq_p_minus_1.json")
        ]
        return got == want, "fifteen powers reproduced in order"

    def tables():
        t1, t2 = classify.coincidence_tables_k_eq_p_minus_1()
        for table, name in ((t1, "table_leading.json"), (t2, "table_subleading.json")):
            fx = classify.fixture_json(name)
            if [str(c) for c in table.columns] != [
                str(parse_affine(c)) for c in fx["columns"]
            ]:
                return False, f"{name}: column mismatch"
            if table.value_strings() != fx["values"]:
                return False, f"{name}: value mismatch"
        return True, "both tables reproduced cell for cell"

    def chain_p0():
        report = classify.case_c_chain_p0(keep_going=True)
        return report.all_passed, f"{len(report.steps)} steps"

    def chain_k1_p2():
        report = classify.case_c_chain_k1_p2(keep_going=True)
        return report.all_passed, f"{len(report.steps)} steps"

    def cubic_split():
        fx = classify.fixture_json("chain_k1_p2.json")
        e = substitute(
            parse(fx["source_equation"]), {"F": parse(fx["cubic_source"])}
        )
        system = split(e)
        ok = len(system) == 4 and all(
            got == parse(text)
            for got, text in zip(system.equations, fx["cubic_split"])
        )
        return ok, "four exact equations, leading one literal"

    def scaling_symbolic():
        fx = classify.fixture_json("chain_p0.json")
        ops = classify.fixture_json("operators.json")
        op = normalize_operator(SymOperator.of(**ops["scaling"]))
        eq = EvolutionEq.power(p=0, F2=parse(fx["source_term"]))
        residuals = check_operator(eq, op)
        return all(r.is_zero() for r in residuals), "all four residuals vanish"

    def numeric_sampled():
        inst = numeric.Instance.from_json(
            classify.fixture_json("instance_scaling.json")
        )
        op = normalize_operator(inst.operator)
        worst = numeric.sample_residuals(inst, op, 1000, seed)
        if worst >= 1e-9:
            return False, f"max residual {worst:.3e}"
        perturbed = SymOperator(op.tau, op.xi, op.eta + parse("1/10*V^2"))
        worst_p = numeric.sample_residuals(inst, perturbed, 200, seed)
        return worst_p > 1e-3, (
            f"symmetry residual {worst:.3e}; perturbed {worst_p:.3e}"
        )

    def numeric_group():
        inst = numeric.Instance.from_json(
            classify.fixture_json("instance_scaling.json")
        )
        field = numeric.solve_pde(inst, numeric.initial_row(inst), inst.grid.steps)
        base = numeric.invariance_residual(field, inst)
        flow = numeric.ScalingFlow(A1=1.0, A2=0.0)
        moved = numeric.group_transform(field, flow, 0.1, inst)
        ratio = numeric.invariance_residual(moved, inst) / base
        wrong = numeric.ScalingFlow(A1=1.0, A2=0.0, v_weight=2.0)
        broken = numeric.group_transform(field, wrong, 0.2, inst)
        bad_ratio = numeric.invariance_residual(broken, inst) / base
        ok = ratio <= 5.0 and bad_ratio >= 10.0
        return ok, f"flow ratio {ratio:.2f}; wrong-weight ratio {bad_ratio:.1f}"

    def substitution_roundtrip():
        rng = np.random.default_rng(seed)
        U = rng.uniform(0.1, 10.0, size=(50, 50))
        worst = 0.0
        for m in (-1, 1, 2):
            V = numeric.substitute_power_log("u_to_v", m, U)
            U2 = numeric.substitute_power_log("v_to_u", m, V)
            worst = max(worst, float(np.max(np.abs(U2 - U))))
        return worst < 1e-12, f"max round-trip deviation {worst:.2e}"

    return [
        ("determining-systems", "regenerate both determining systems", regeneration),
        ("eta-general-solution", "general eta for V-linear xi", eta_solution),
        ("source-term-extraction", "extract and re-check the source term", source_extraction),
        ("coincidence-six-powers", "five coincidence cases of the reduced analysis", six_cases),
        ("coincidence-fifteen-powers", "thirteen coincidence cases of the full analysis", fifteen_cases),
        ("fifteen-powers-shifted", "fifteen powers under k = p-1", fifteen_list),
        ("coincidence-tables", "leading and subleading coincidence tables", tables),
        ("chain-p0", "derivation chain for p = 0", chain_p0),
        ("chain-k1-p2", "derivation chain for k = 1, p = 2", chain_k1_p2),
        ("cubic-source-split", "cubic source splits into the four relations", cubic_split),
        ("scaling-operator-symbolic", "scaling-translation operator check", scaling_symbolic),
        ("sampled-residuals", "numeric determining residuals", numeric_sampled),
        ("group-flow-invariance", "group flow maps solutions to solutions", numeric_group),
        ("substitution-roundtrip", "state-substitution round trip", substitution_roundtrip),
    ]


def verify_paper(seed: int = 0, keep_going: bool = False, corrupt: str | None = None):
    """Run the fourteen-step reproduction suite; returns (report, all_passed)."""
    report = []
    all_ok = True
    for step_id, description, fn in _suite_steps(seed, corrupt):
        if not all_ok and not keep_going:
            report.append(
                {"id": step_id, "description": description, "status": "skipped",
                 "detail": ""}
            )
            continue
        try:
            ok, detail = fn()
        except (TermLanguageError, NumericError) as exc:
            ok, detail = False, str(exc)
        report.append(
            {
                "id": step_id,
                "description": description,
                "status": "pass" if ok else "fail",
                "detail": detail,
            }
        )
        all_ok = all_ok and ok
    return report, all_ok


def _cmd_verify_paper(args) -> int:
    report, ok = verify_paper(args.seed, args.keep_going, args.corrupt)
    lines = []
    for step in report:
        status = step["status"].upper()
        lines.append(f"[{status:>4}] {step['id']:<28} {step['detail']}")
    lines.append(
        f"{sum(1 for s in report if s['status'] == 'pass')}/{len(report)} steps passed"
    )
    _emit(report, args.json, lines)
    return 0 if ok else 1


_HANDLERS = {
    "derive": _cmd_derive,
    "coincide": _cmd_coincide,
    "table": _cmd_table,
    "check-op": _cmd_check_op,
    "check-op-numeric": _cmd_check_op_numeric,
    "split": _cmd_split,
    "transform": _cmd_transform,
    "verify-paper": _cmd_verify_paper,
}


def main(argv=None) -> int:
    ap = _build_argparser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return _HANDLERS[args.command](args)
    except (TermLanguageError, NumericError, OSError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Grid-refinement study for the finite-difference solver.

Solves V_t = V_xx + V V_x with the exact solution V = x/(1-t) fed through
the boundaries and reports how the discrete residual of the solved field
shrinks as dx is halved (dt scaled with dx^2).
"""
import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from qcsym.numeric import Instance, invariance_residual, solve_pde  # noqa: E402


def run(nx: int) -> float:
    dx = 1.0 / (nx - 1)
    dt = 0.4 * dx * dx
    steps = int(round(0.1 / dt))
    inst = Instance.from_json(
        {
            "family": "power", "p": 0, "k": 1, "lambda": 1, "F": "0",
            "operator": {"tau": "1", "xi": "0", "eta": "0"},
            "grid": {"x0": 0.0, "x1": 1.0, "nx": nx, "t0": 0.0,
                     "dt": dt, "steps": steps},
            "seed": 0,
        }
    )
    xs = inst.grid.xs()
    field = solve_pde(
        inst, xs.copy(), steps, boundary=lambda t: (0.0, 1.0 / (1.0 - t))
    )
    return invariance_residual(field, inst)


def main() -> int:
    previous = None
    print(f"{'nx':>6} {'residual':>12} {'factor':>8} {'order':>6}")
    for nx in (26, 51, 101, 201):
        res = run(nx)
        if previous is None:
            print(f"{nx:>6} {res:>12.3e} {'-':>8} {'-':>6}")
        else:
            factor = previous / res
            print(f"{nx:>6} {res:>12.3e} {factor:>8.2f} {math.log2(factor):>6.2f}")
        previous = res
    return 0


if __name__ == "__main__":
    sys.exit(main())

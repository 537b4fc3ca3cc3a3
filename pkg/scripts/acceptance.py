#!/usr/bin/env python3
"""
Desk-scale acceptance runs: conservation, entropy, positivity, the physical
constraint, structural exactness and bit-exact restart.

Run the property battery separately with `nematic check`.
"""
import argparse
import logging
import sys
import tempfile
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent.parent))

from dotenv import load_dotenv
load_dotenv()

from src.diagnostics.positivity import positivity_audit
from src.diagnostics.entropy import entropy_balance_residual
from src.dynamics.models import SchemeParams, State
from src.dynamics.presets import build_initial_state
from src.dynamics.solver import NematicSolver
from src.errors import SchemeFailure
from src.fields.grid import Grid
from src.fields.snapshot import FieldKind, read_snapshot, write_snapshot
from src.potential.thermo import default_thermo, positivity_rate_bound

logging.basicConfig(level=logging.INFO, format="%(asctime)s | %(levelname)s | %(message)s")
logger = logging.getLogger(__name__)

DRIVEN = dict(m=100.0, delta=1e-3, r=3.2)


def _solver(grid: Grid, **params) -> NematicSolver:
    return NematicSolver(grid, SchemeParams(**params), default_thermo())


def _start(solver: NematicSolver, presets, amplitude: float, seed: int = 0) -> State:
    state = build_initial_state(solver.grid, presets, amplitude, 1.0, seed)
    return solver.prepare_initial(state)


def _structural(records) -> bool:
    return all(r.trace_Q <= 1e-12 and r.div_u <= 1e-10 for r in records)


def check_equilibrium(grid: Grid, steps: int) -> bool:
    solver = _solver(grid, dt=1e-3)
    _, records = solver.run(_start(solver, ["equilibrium"], 0.0), steps)
    per_step = max(r.energy_drift for r in records) / steps
    ok = per_step <= 1e-12 and _structural(records)
    print(f"[{'PASS' if ok else 'FAIL'}] equilibrium: drift per step {per_step:.3e} over {steps} steps")
    return ok


def _driven(grid: Grid, dt: float, t_end: float):
    solver = _solver(grid, dt=dt, **DRIVEN)
    state = _start(solver, ["uniaxial-seed", "taylor-green-velocity"], 0.3)
    _, records = solver.run(state, int(round(t_end / dt)), diag_every=max(1, int(round(0.01 / dt))))
    return solver, records


def check_driven(grid: Grid, dt: float, t_end: float) -> bool:
    coarse_solver, coarse = _driven(grid, dt, t_end)
    _, fine = _driven(grid, dt / 2, t_end)
    ratio = coarse[-1].energy_drift / max(fine[-1].energy_drift, 1e-300)
    drift_ok = 1.5 <= ratio <= 3.0
    print(f"[{'PASS' if drift_ok else 'FAIL'}] driven run: drift ratio under dt halving {ratio:.3f}")

    production_ok = all(r.production_min >= -1e-10 for r in coarse + fine)
    print(f"[{'PASS' if production_ok else 'FAIL'}] entropy production pointwise >= -1e-10")

    bound = positivity_rate_bound(coarse_solver.thermo, coarse_solver.params.xi)
    audits = [positivity_audit(records, bound) for records in (coarse, fine)]
    positivity_ok = all(not a.violated and a.floor_activations == 0 for a in audits)
    print(f"[{'PASS' if positivity_ok else 'FAIL'}] positivity: lambda_hat {audits[0].lambda_hat:.3e} <= {bound:.3e}")

    structural_ok = _structural(coarse) and _structural(fine)
    print(f"[{'PASS' if structural_ok else 'FAIL'}] tr Q and div u within tolerance")
    return drift_ok and production_ok and positivity_ok and structural_ok


def _heat_decay(grid: Grid, dt: float, t_end: float):
    solver = _solver(grid, dt=dt)
    state = State.zeros(grid.shape, theta0=1.0)
    state.theta = 1.0 + 0.1 * np.sin(grid.coordinates()[0])
    _, records = solver.run(state, int(round(t_end / dt)))
    return records


def check_entropy_balance(grid: Grid, dt: float, t_end: float) -> bool:
    coarse = entropy_balance_residual(_heat_decay(grid, dt, t_end), grid.volume)
    fine = entropy_balance_residual(_heat_decay(grid, dt / 2, t_end), grid.volume)
    ratio = coarse / max(fine, 1e-300)
    ok = 1.5 <= ratio <= 3.0
    print(f"[{'PASS' if ok else 'FAIL'}] entropy balance residual ratio under dt halving {ratio:.3f} (heat decay)")
    return ok


def check_quench(grid: Grid, steps: int) -> bool:
    solver = _solver(grid, dt=1e-3, m="exact")
    try:
        _, records = solver.run(_start(solver, ["isotropic-quench"], 0.2, seed=7), steps, diag_every=10)
    except SchemeFailure as e:
        print(f"[FAIL] exact quench: {type(e).__name__}: {e}")
        return False
    eig_ok = all(r.q_eig_min > -1.0 / 3.0 + 1e-8 and r.q_eig_max < 2.0 / 3.0 - 1e-8 for r in records)
    ok = eig_ok and _structural(records)
    print(f"[{'PASS' if ok else 'FAIL'}] exact quench: eigenvalues in "
          f"[{min(r.q_eig_min for r in records):.4f}, {max(r.q_eig_max for r in records):.4f}] over {steps} steps")
    return ok


def check_restart(grid: Grid, steps: int) -> bool:
    solver = _solver(grid, dt=1e-3, **DRIVEN)
    start = _start(solver, ["uniaxial-seed", "taylor-green-velocity"], 0.3)
    straight, _ = solver.run(start, 2 * steps)

    half, _ = solver.run(start, steps)
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "half.bin"
        write_snapshot(path, half.pack(), FieldKind.STATE, half.t, half.step)
        snapshot = read_snapshot(path)
    resumed = State.unpack(snapshot.data, snapshot.time, snapshot.step)
    resumed, _ = solver.run(resumed, steps)

    ok = np.array_equal(straight.pack(), resumed.pack()) and straight.t == resumed.t
    print(f"[{'PASS' if ok else 'FAIL'}] restart from snapshot is bit-exact")
    return ok


def main() -> int:
    parser = argparse.ArgumentParser(description="Desk-scale acceptance runs")
    parser.add_argument("--n", type=int, default=64, help="Grid points per axis (2-D)")
    parser.add_argument("--dt", type=float, default=2e-3, help="Coarse step of the driven pair")
    parser.add_argument("--t-end", type=float, default=0.1, help="Final time of the driven pair")
    parser.add_argument("--quench-steps", type=int, default=500)
    args = parser.parse_args()

    grid = Grid(args.n, dim=2)
    results = [
        check_equilibrium(grid, 200),
        check_driven(grid, args.dt, args.t_end),
        check_entropy_balance(grid, args.dt, args.t_end),
        check_quench(grid, args.quench_steps),
        check_restart(grid, 10),
    ]
    passed = sum(results)
    print(f"\n=== Summary: {passed}/{len(results)} passed ===")
    return 0 if all(results) else 1


if __name__ == "__main__":
    sys.exit(main())

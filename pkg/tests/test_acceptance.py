# tests/test_acceptance.py
import os

import numpy as np
import pytest

from src.cli import main
from src.diagnostics.battery import run_property_battery
from src.diagnostics.entropy import entropy_balance_residual
from src.diagnostics.positivity import positivity_audit
from src.dynamics.models import SchemeParams, State
from src.dynamics.presets import build_initial_state
from src.dynamics.solver import NematicSolver
from src.fields.grid import Grid
from src.potential.thermo import default_thermo, positivity_rate_bound

pytestmark = pytest.mark.skipif(
    os.getenv("NEMATIC_ACCEPTANCE", "").lower() not in ("true", "1", "yes"),
    reason="Acceptance runs skipped (set NEMATIC_ACCEPTANCE=1)"
)


def test_check_subcommand_passes():
    assert main(["check"]) == 0


def test_full_battery():
    results = run_property_battery(seed=1234)
    failed = [f"{r.name}: {r.detail}" for r in results if not r.passed]
    assert not failed


def test_equilibrium_conserves_energy_over_200_steps():
    grid = Grid(64, 2)
    solver = NematicSolver(grid)
    state = solver.prepare_initial(build_initial_state(grid, ["equilibrium"]))
    _, records = solver.run(state, 200, diag_every=20)
    assert max(r.energy_drift for r in records) / 200 <= 1e-12


def _driven(dt: float, t_end: float = 0.1):
    grid = Grid(64, 2)
    solver = NematicSolver(grid, SchemeParams(dt=dt, m=100.0, delta=1e-3, r=3.2), default_thermo())
    state = build_initial_state(grid, ["uniaxial-seed", "taylor-green-velocity"], 0.3)
    _, records = solver.run(solver.prepare_initial(state), int(round(t_end / dt)), diag_every=max(1, int(round(0.01 / dt))))
    return solver, records


def test_driven_run_is_first_order_in_time():
    solver, coarse = _driven(2e-3)
    _, fine = _driven(1e-3)
    ratio = coarse[-1].energy_drift / fine[-1].energy_drift
    assert 1.5 <= ratio <= 3.0
    for records in (coarse, fine):
        assert all(r.production_min >= -1e-10 for r in records)
        assert all(r.div_u <= 1e-10 and r.trace_Q <= 1e-12 for r in records)
        audit = positivity_audit(records, positivity_rate_bound(solver.thermo, solver.params.xi))
        assert not audit.violated and audit.floor_activations == 0


def _heat_decay_residual(dt: float, t_end: float = 0.1) -> float:
    grid = Grid(64, 2)
    solver = NematicSolver(grid, SchemeParams(dt=dt))
    state = State.zeros(grid.shape, theta0=1.0)
    state.theta = 1.0 + 0.1 * np.sin(grid.coordinates()[0])
    _, records = solver.run(state, int(round(t_end / dt)))
    return entropy_balance_residual(records, grid.volume)


def test_entropy_balance_is_first_order_in_time():
    ratio = _heat_decay_residual(2e-3) / _heat_decay_residual(1e-3)
    assert 1.5 <= ratio <= 3.0


def test_exact_quench_stays_physical():
    grid = Grid(64, 2)
    solver = NematicSolver(grid, SchemeParams(dt=1e-3, m="exact"))
    state = solver.prepare_initial(build_initial_state(grid, ["isotropic-quench"], 0.2, seed=7))
    _, records = solver.run(state, 500, diag_every=25)
    assert min(r.q_eig_min for r in records) > -1.0 / 3.0 + 1e-8
    assert max(r.q_eig_max for r in records) < 2.0 / 3.0 - 1e-8
    assert np.isfinite(records[-1].total_energy)

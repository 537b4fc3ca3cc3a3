# tests/test_dynamics.py
import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.dynamics.assembly import assemble_stress, r_laplacian_flux
from src.dynamics.models import SchemeParams, State, StepTolerances
from src.dynamics.presets import PRESETS, build_initial_state, kolmogorov_forcing
from src.dynamics.solver import NematicSolver
from src.errors import CFLViolation, DomainViolation
from src.fields.grid import Grid
from src.potential.singular import evaluate_bulk
from src.potential.thermo import TruncatedCoupling, default_thermo
from src.tensors.kinematics import odot, stretching
from src.tensors.qtensor import q_inner, q_norm2, uniaxial


@pytest.fixture(scope="module")
def grid():
    return Grid(16, 2)


def _driven_solver(grid, **overrides):
    params = dict(dt=1e-3, m=100.0, delta=1e-3, r=3.2)
    params.update(overrides)
    return NematicSolver(grid, SchemeParams(**params), default_thermo())


def _driven_state(solver):
    state = build_initial_state(solver.grid, ["uniaxial-seed", "taylor-green-velocity"], 0.3)
    return solver.prepare_initial(state)


def test_scheme_params_defaults_and_exact():
    params = SchemeParams()
    assert params.dt == 1e-3 and math.isinf(params.m) and params.exact
    assert SchemeParams(m="exact").exact
    assert not SchemeParams(m=10.0).exact


def test_scheme_params_r_range():
    with pytest.raises(ValidationError):
        SchemeParams(delta=0.1, r=2.5)
    assert SchemeParams(delta=0.0, r=2.5).r == 2.5
    with pytest.raises(ValidationError):
        SchemeParams(dt=0.0)


def test_state_pack_layout():
    state = State.zeros((8, 8), theta0=2.0)
    state.u[..., 1] = 1.0
    packed = state.pack()
    assert packed.shape == (8, 8, 10)
    assert np.all(packed[..., 1] == 1.0) and np.all(packed[..., 8] == 2.0)
    restored = State.unpack(packed, 0.5, 3)
    assert np.array_equal(restored.u, state.u) and restored.step == 3
    with pytest.raises(ValueError):
        State.unpack(np.zeros((8, 8, 9)), 0.0, 0)


def test_presets_known_and_unknown(grid):
    assert set(PRESETS) == {"equilibrium", "isotropic-quench", "uniaxial-seed", "taylor-green-velocity", "hot-spot-theta"}
    with pytest.raises(ValueError):
        build_initial_state(grid, ["vortex-street"])


def test_taylor_green_is_solenoidal(grid):
    state = build_initial_state(grid, ["taylor-green-velocity"], 1.0)
    assert np.abs(state.u).max() == pytest.approx(1.0, rel=0.05)
    assert grid.max_divergence(state.u) <= 1e-12


def test_isotropic_quench_amplitude(grid):
    state = build_initial_state(grid, ["isotropic-quench"], 0.2, seed=5)
    assert np.sqrt(q_norm2(state.Q)).max() == pytest.approx(0.2)
    again = build_initial_state(grid, ["isotropic-quench"], 0.2, seed=5)
    assert np.array_equal(state.Q, again.Q)


def test_hot_spot_peaks_at_centre(grid):
    state = build_initial_state(grid, ["hot-spot-theta"], 0.5, theta0=2.0)
    assert state.theta.min() >= 2.0
    assert state.theta.max() == pytest.approx(3.0)


def test_kolmogorov_forcing(grid):
    assert np.all(kolmogorov_forcing(grid, 0.0) == 0.0)
    g = kolmogorov_forcing(grid, 2.0)
    assert np.allclose(g[..., 0], 2.0 * np.sin(grid.coordinates()[1]))


def test_r_laplacian_flux():
    g = np.random.default_rng(0).normal(size=(4, 3, 3))
    assert np.all(r_laplacian_flux(g, 0.0, 3.2) == 0.0)
    flux = r_laplacian_flux(g, 0.1, 3.2)
    norm = np.sqrt(np.sum(g ** 2, axis=(-2, -1)))
    assert np.allclose(np.sum(flux * g, axis=(-2, -1)), 0.1 * norm ** 3.2)


def test_stress_viscous_part_at_isotropic_state(grid):
    state = build_initial_state(grid, ["taylor-green-velocity"], 1.0)
    params = SchemeParams()
    sigma = assemble_stress(state, np.zeros(grid.shape + (5,)), grid, params, default_thermo())
    g = grid.velocity_gradient(state.u)
    assert np.allclose(sigma, g + np.swapaxes(g, -1, -2), atol=1e-12)


def test_solver_truncates_coupling_when_regularized(grid):
    assert isinstance(_driven_solver(grid).thermo.active_coupling, TruncatedCoupling)
    assert NematicSolver(grid).thermo.coupling_delta is None


def test_equilibrium_is_stationary(grid):
    solver = NematicSolver(grid)
    state = solver.prepare_initial(build_initial_state(grid, ["equilibrium"]))
    final, records = solver.run(state, 5)
    assert len(records) == 6
    assert max(r.energy_drift for r in records) <= 1e-12
    assert np.allclose(final.theta, 1.0, atol=1e-14)
    assert np.all(final.u == 0.0) and np.all(final.Q == 0.0)


def test_driven_run_keeps_structure(grid):
    solver = _driven_solver(grid)
    final, records = solver.run(_driven_state(solver), 5, diag_every=2)
    assert [r.step for r in records] == [0, 2, 4, 5]
    for record in records:
        assert record.div_u <= 1e-10
        assert record.trace_Q <= 1e-12
        assert record.production_min >= -1e-10
        assert record.theta_min > 0
    assert records[-1].floor_activations == 0
    assert final.t == pytest.approx(5e-3)


def test_step_report(grid):
    solver = _driven_solver(grid)
    state = _driven_state(solver)
    new_state, report = solver.step(state)
    assert report.step == 1 and new_state.step == 1
    assert report.div_residual <= 1e-10
    assert report.stretching_trace <= 1e-10
    assert 0 < report.cfl < 0.5


def test_frozen_temperature(grid):
    solver = _driven_solver(grid, frozen_temperature=True)
    state = _driven_state(solver)
    new_state, _ = solver.step(state)
    assert np.array_equal(new_state.theta, state.theta)


def test_restart_is_bit_exact(grid):
    solver = _driven_solver(grid)
    start = _driven_state(solver)
    straight, _ = solver.run(start, 4)
    half, _ = solver.run(start, 2)
    resumed, _ = solver.run(State.unpack(half.pack(), half.t, half.step), 2)
    assert np.array_equal(straight.pack(), resumed.pack())
    assert resumed.step == 4


def test_cfl_abort_carries_partial_outcome(grid):
    solver = NematicSolver(grid, SchemeParams(dt=10.0), tolerances=StepTolerances())
    state = solver.prepare_initial(build_initial_state(grid, ["taylor-green-velocity"], 1.0))
    with pytest.raises(CFLViolation) as exc:
        solver.run(state, 3)
    partial = exc.value.partial
    assert partial.state.step == 0
    assert len(partial.records) == 1


def test_run_rejects_bad_cadence(grid):
    solver = NematicSolver(grid)
    with pytest.raises(ValueError):
        solver.run(State.zeros(grid.shape), 1, diag_every=0)


def test_exact_solver_rejects_q_past_the_quadrature_ceiling(grid):
    solver = NematicSolver(grid)
    q = np.zeros(grid.shape + (5,))
    q[0, 0] = uniaxial(0.995, [0.0, 0.0, 1.0])
    with pytest.raises(DomainViolation) as exc:
        solver.check_domain(q)
    assert exc.value.count == 1


def _free_energy(solver, q, theta):
    """Discrete integral of 1/2 |grad Q|^2 + f_m(Q) - U_delta(theta) G(Q)."""
    grid, thermo = solver.grid, solver.thermo
    elastic = 0.5 * np.sum(q_norm2(grid.grad(q)), axis=-1)
    bulk = evaluate_bulk(q, solver.params.m, solver.quad, solver.settings).value
    coupling = np.asarray(thermo.active_coupling.value(theta)) * thermo.order.value(q)
    return float(grid.integrate(elastic + bulk - coupling))


@pytest.mark.parametrize("m", [100.0, "exact"])
def test_molecular_field_is_minus_the_free_energy_gradient(grid, m):
    solver = NematicSolver(grid, SchemeParams(m=m))
    state = build_initial_state(grid, ["isotropic-quench", "hot-spot-theta"], 0.2, seed=3)
    direction = build_initial_state(grid, ["isotropic-quench"], 0.2, seed=4).Q

    H = solver.assemble_H(state).H
    analytic = -float(grid.integrate(q_inner(H, direction)))
    h = 1e-5
    numeric = (
        _free_energy(solver, state.Q + h * direction, state.theta)
        - _free_energy(solver, state.Q - h * direction, state.theta)
    ) / (2.0 * h)
    assert abs(analytic - numeric) <= 1e-5 * abs(analytic)


def test_stress_power_matches_dissipation_and_exchange(grid):
    solver = _driven_solver(grid, xi=0.7)
    state = _driven_state(solver)
    H = solver.assemble_H(state).H
    sigma = solver.assemble_stress(state, H)
    g = grid.velocity_gradient(state.u)
    sym = g + np.swapaxes(g, -1, -2)

    power = np.einsum("...ij,...ij->...", sigma, g)
    viscous = 0.5 * np.asarray(solver.thermo.mu(state.theta)) * np.einsum("...ij,...ij->...", sym, sym)
    r_laplacian = solver.params.delta * np.einsum("...ij,...ij->...", g, g) ** (0.5 * solver.params.r)
    elastic = np.einsum("...ij,...ij->...", odot(grid.grad(state.Q)), g)
    exchange = q_inner(H, stretching(g, state.Q, solver.params.xi))

    lhs = float(grid.integrate(power))
    rhs = float(grid.integrate(viscous + r_laplacian - elastic - exchange))
    scale = sum(float(grid.integrate(np.abs(term))) for term in (viscous, r_laplacian, elastic, exchange))
    assert abs(lhs - rhs) <= 1e-8 * scale


def _heat_wave(grid, amplitude=0.1):
    state = State.zeros(grid.shape, theta0=1.0)
    state.theta = 1.0 + amplitude * np.sin(grid.coordinates()[0])
    return state


def test_heat_mode_decays_at_kappa(grid):
    solver = NematicSolver(grid, SchemeParams(dt=1e-3))
    final, _ = solver.run(_heat_wave(grid), 100, diag_every=100)
    assert np.allclose(final.u, 0.0) and np.allclose(final.Q, 0.0)
    amplitude = 0.5 * float(final.theta.max() - final.theta.min())
    rate = -math.log(amplitude / 0.1) / final.t
    assert rate == pytest.approx(solver.thermo.kappa.upper, rel=0.01)
    assert float(grid.integrate(final.theta)) == pytest.approx(grid.volume, rel=1e-12)


def test_uniform_q_relaxes_with_decreasing_free_energy(grid):
    solver = NematicSolver(grid, SchemeParams(dt=1e-3, frozen_temperature=True))
    state = State.zeros(grid.shape, theta0=1.0)
    state.Q[...] = uniaxial(0.05, [0.0, 0.0, 1.0])

    energies = [_free_energy(solver, state.Q, state.theta)]
    sizes = [float(q_norm2(state.Q).max())]
    for _ in range(30):
        state, _ = solver.step(state)
        energies.append(_free_energy(solver, state.Q, state.theta))
        sizes.append(float(q_norm2(state.Q).max()))

    assert np.all(np.diff(energies) <= 1e-12)
    assert energies[-1] < energies[0]
    assert np.all(np.diff(sizes) < 0)
    assert np.all(state.u == 0.0)

"""
Energy, entropy and constraint audit of a single state.

e = 1/2 |grad Q|^2 + f_m(Q) - (U_delta - theta U'_delta) G(Q) + theta, and the
total energy adds 1/2 |u|^2; s = 1 + log theta + U'_delta G(Q).
"""
from typing import TYPE_CHECKING, Optional

import numpy as np

from src.diagnostics.entropy import entropy_production
from src.diagnostics.records import DiagnosticsRecord
from src.dynamics.assembly import MolecularField
from src.dynamics.models import State
from src.potential.thermo import eval_thermo
from src.tensors.eigen import q_eigenvalues
from src.tensors.qtensor import q_norm2, to_matrix

if TYPE_CHECKING:
    from src.dynamics.solver import NematicSolver


def energy_report(
    state: State,
    solver: "NematicSolver",
    field: Optional[MolecularField] = None,
) -> DiagnosticsRecord:
    """Integrated energies, entropy and residuals of one state.

    History-dependent columns (energy_drift, momentum_residual and the
    cumulative counters) are left at zero; the run loop fills them.
    """
    grid = solver.grid
    if field is None:
        field = solver.assemble_H(state)
    theta = state.theta
    thermal = eval_thermo(theta, state.Q, solver.thermo)

    kinetic = float(grid.integrate(0.5 * np.sum(state.u ** 2, axis=-1)))
    elastic = float(grid.integrate(0.5 * np.sum(q_norm2(field.grad_q), axis=-1)))
    bulk = float(grid.integrate(field.bulk.value))
    coupling = float(grid.integrate(-(thermal.U - theta * thermal.dU) * thermal.G))
    heat = float(grid.integrate(theta))

    production = entropy_production(state, field.H, solver)
    eigenvalues = q_eigenvalues(state.Q)
    trace = np.trace(to_matrix(state.Q), axis1=-2, axis2=-1)

    return DiagnosticsRecord(
        t=state.t,
        kinetic=kinetic,
        elastic=elastic,
        bulk=bulk,
        thermal_coupling=coupling,
        heat=heat,
        total_energy=kinetic + elastic + bulk + coupling + heat,
        entropy=float(grid.integrate(thermal.s)),
        entropy_production=float(grid.integrate(production)),
        theta_min=float(np.min(theta)),
        theta_max=float(np.max(theta)),
        q_eig_min=float(np.min(eigenvalues[..., 2])),
        q_eig_max=float(np.max(eigenvalues[..., 0])),
        div_u=grid.max_divergence(state.u),
        trace_Q=float(np.max(np.abs(trace))),
        step=state.step,
        pressure_l2=float(np.sqrt(grid.integrate(state.p ** 2))),
        newton_iters_max=field.bulk.max_iterations,
        production_min=float(np.min(production)),
    )

"""
Entropy production and the integrated entropy balance.

The production density is

    (1/theta) [ mu/2 |grad u + grad u^T|^2 + Gamma_eps |H|^2
                + (kappa/theta) |grad theta|^2 + delta |grad u|^r ],

one channel per dissipation mechanism, each nonnegative for theta > 0.
"""
from typing import TYPE_CHECKING

import numpy as np
from numpy.typing import NDArray

from src.diagnostics.records import DiagnosticsRecord
from src.dynamics.models import State
from src.errors import InsufficientHistory
from src.potential.thermo import require_positive
from src.tensors.qtensor import q_norm2

if TYPE_CHECKING:
    from src.dynamics.solver import NematicSolver


def heat_flux(state: State, solver: "NematicSolver") -> NDArray[np.float64]:
    """Fourier flux -kappa(theta) grad theta, shape (*grid, 3)."""
    kappa = np.asarray(solver.thermo.kappa(state.theta))
    return -kappa[..., None] * solver.grid.grad(state.theta)


def entropy_production_terms(
    state: State,
    H: NDArray[np.float64],
    solver: "NematicSolver",
) -> dict[str, NDArray[np.float64]]:
    """Viscous, rotational, Fourier and r-Laplacian channels of the production density.

    Raises:
        NonpositiveTemperature: theta <= 0 somewhere
    """
    theta = state.theta
    require_positive(theta, "entropy production")
    grid, params, thermo = solver.grid, solver.params, solver.thermo

    g = grid.velocity_gradient(state.u)
    sym = g + np.swapaxes(g, -1, -2)
    grad_theta = grid.grad(theta)

    viscous = 0.5 * np.asarray(thermo.mu(theta)) * np.einsum("...ij,...ij->...", sym, sym)
    rotational = solver.gamma_field(theta) * q_norm2(H)
    fourier = np.asarray(thermo.kappa(theta)) * np.sum(grad_theta ** 2, axis=-1) / theta
    if params.delta > 0:
        r_laplacian = params.delta * np.einsum("...ij,...ij->...", g, g) ** (0.5 * params.r)
    else:
        r_laplacian = np.zeros_like(theta)

    return {
        "viscous": viscous / theta,
        "rotational": rotational / theta,
        "fourier": fourier / theta,
        "r_laplacian": r_laplacian / theta,
    }


def entropy_production(state: State, H: NDArray[np.float64], solver: "NematicSolver") -> NDArray[np.float64]:
    """Pointwise production density (sum of all channels)."""
    return sum(entropy_production_terms(state, H, solver).values())


def entropy_balance_residual(records: list[DiagnosticsRecord], volume: float = 1.0) -> float:
    """Worst mismatch between d/dt of total entropy and the integrated production.

    Each consecutive pair of records contributes
    |(S_1 - S_0)/(t_1 - t_0) - (P_0 + P_1)/2|, and the result is normalized by
    max(max |P|, volume).

    Raises:
        InsufficientHistory: fewer than two records
    """
    if len(records) < 2:
        raise InsufficientHistory(f"entropy balance needs at least 2 records, got {len(records)}")

    worst = 0.0
    for before, after in zip(records[:-1], records[1:]):
        elapsed = after.t - before.t
        if elapsed <= 0:
            raise InsufficientHistory(f"records at t={before.t} and t={after.t} are not increasing in time")
        rate = (after.entropy - before.entropy) / elapsed
        production = 0.5 * (before.entropy_production + after.entropy_production)
        worst = max(worst, abs(rate - production))

    scale = max(max(abs(r.entropy_production) for r in records), volume)
    return worst / scale

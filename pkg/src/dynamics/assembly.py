"""
Molecular field and stress assembly.

H = Laplacian Q - L[df_m/dQ] + U_delta(theta) L[dG/dQ]

sigma' = mu (grad u + grad u^T)
         + 2 xi (H:Q)(Q + I/3) - xi [H (Q + I/3) + (Q + I/3) H]
         + (QH - HQ) - grad Q (.) grad Q
         + delta |grad u|^(r-2) grad u

The pressure is not part of sigma'; it comes out of the Leray projection.
With these signs -H : S = [sigma' - viscous - r-Laplacian + grad Q (.) grad Q] : grad u
for solenoidal u, which is what makes the kinetic and elastic exchanges cancel.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from src.dynamics.models import SchemeParams, State
from src.fields.grid import Grid
from src.potential.quadrature import SphereQuadrature
from src.potential.singular import DEFAULT_SETTINGS, PotentialEval, PotentialSettings, evaluate_bulk
from src.potential.thermo import ThermoFunctions
from src.tensors.kinematics import odot
from src.tensors.qtensor import IDENTITY, q_inner, to_matrix


@dataclass
class MolecularField:
    H: NDArray[np.float64]
    laplacian: NDArray[np.float64]  # Laplacian Q
    grad_q: NDArray[np.float64]  # (*grid, 3, 5)
    coupling: NDArray[np.float64]  # U_delta(theta) L[dG/dQ]
    bulk: PotentialEval

    @property
    def local(self) -> NDArray[np.float64]:
        """H without the Laplacian."""
        return self.coupling - self.bulk.gradient


def assemble_H(
    state: State,
    grid: Grid,
    params: SchemeParams,
    thermo: ThermoFunctions,
    quad: SphereQuadrature,
    settings: PotentialSettings = DEFAULT_SETTINGS,
) -> MolecularField:
    """Molecular field of the state.

    Raises:
        DomainViolation: m is exact and Q left the physical domain
        NoConvergence: the potential solve failed
    """
    bulk = evaluate_bulk(state.Q, params.m, quad, settings)
    laplacian = grid.laplacian(state.Q)
    u_delta = np.asarray(thermo.active_coupling.value(state.theta))
    coupling = u_delta[..., None] * thermo.order.gradient(state.Q)
    return MolecularField(
        H=laplacian - bulk.gradient + coupling,
        laplacian=laplacian,
        grad_q=grid.grad(state.Q),
        coupling=coupling,
        bulk=bulk,
    )


def r_laplacian_flux(g: NDArray[np.float64], delta: float, r: float) -> NDArray[np.float64]:
    """delta |g|^(r-2) g."""
    if delta == 0:
        return np.zeros_like(g)
    norm = np.sqrt(np.einsum("...ij,...ij->...", g, g))
    return delta * (norm ** (r - 2.0))[..., None, None] * g


def assemble_stress(
    state: State,
    H: NDArray[np.float64],
    grid: Grid,
    params: SchemeParams,
    thermo: ThermoFunctions,
    grad_u: Optional[NDArray[np.float64]] = None,
    grad_q: Optional[NDArray[np.float64]] = None,
) -> NDArray[np.float64]:
    """Extra stress sigma' as (*grid, 3, 3) matrices; (div sigma)_i = d_j sigma_ij."""
    g = grid.velocity_gradient(state.u) if grad_u is None else grad_u
    gq = grid.grad(state.Q) if grad_q is None else grad_q
    qm = to_matrix(state.Q)
    hm = to_matrix(H)

    mu = np.asarray(thermo.mu(state.theta))
    sigma = mu[..., None, None] * (g + np.swapaxes(g, -1, -2))

    xi = params.xi
    if xi:
        shifted = qm + IDENTITY / 3.0
        alignment = q_inner(H, state.Q)[..., None, None]
        sigma += 2.0 * xi * alignment * shifted - xi * (hm @ shifted + shifted @ hm)

    sigma += qm @ hm - hm @ qm
    sigma -= odot(gq)
    sigma += r_laplacian_flux(g, params.delta, params.r)
    return sigma

"""
First-order IMEX pseudo-spectral stepper for velocity, Q-tensor and temperature.

Each step:
  1. Q:  (Q^{n+1} - Q^n)/dt + u.grad Q - S = Gamma_eps H, with Gamma_bar Laplacian Q
     implicit and the remainder explicit.
  2. u:  (u^{n+1} - u^n)/dt + (u.grad)u + grad p = div sigma' + g, with mu_bar Laplacian u
     implicit, then Leray projection; p is read off the projected-out part.
  3. theta, at the half-updated state (u^{n+1}, Q^n, H^n, theta^n):
        c (theta_t + u.grad theta) = div(kappa grad theta)
            + mu/2 |grad u + grad u^T|^2 + Gamma_eps |H|^2 + delta |grad u|^r
            - theta U'_delta L[dG/dQ] : (S + Gamma_eps H),
     c = 1 + theta U''_delta G, with kappa_bar Laplacian theta implicit.
Every explicit right-hand side is dealiased before the implicit solve. The
implicit coefficients are the upper bounds of Gamma, mu and kappa, which keeps
each solve diagonal in Fourier space.
"""
import logging
from typing import Callable, Optional

import numpy as np
from numpy.typing import NDArray

from src.diagnostics.energy import energy_report
from src.diagnostics.records import DiagnosticsRecord
from src.dynamics.assembly import MolecularField, assemble_H, assemble_stress
from src.dynamics.models import RunOutcome, SchemeParams, State, StepReport, StepTolerances
from src.dynamics.presets import kolmogorov_forcing
from src.errors import (
    CFLViolation,
    IncompressibilityLoss,
    SchemeFailure,
    TemperatureCollapse,
)
from src.fields.grid import Grid
from src.observability import StructuredLogger, metrics, phase_ctx, track_latency
from src.potential.quadrature import SphereQuadrature
from src.potential.singular import DEFAULT_SETTINGS, PotentialSettings, eval_f, require_in_domain
from src.potential.thermo import ThermoFunctions, default_thermo, require_positive, truncate_U
from src.tensors.eigen import q_eigenvalues
from src.tensors.kinematics import stretching, stretching_matrix
from src.tensors.qtensor import project_matrix, q_inner, q_norm2

logger = logging.getLogger(__name__)


class NematicSolver:
    """Holds the grid, scheme knobs and constitutive functions of one run."""

    def __init__(
        self,
        grid: Grid,
        params: Optional[SchemeParams] = None,
        thermo: Optional[ThermoFunctions] = None,
        quad: Optional[SphereQuadrature] = None,
        settings: PotentialSettings = DEFAULT_SETTINGS,
        tolerances: Optional[StepTolerances] = None,
        forcing: Optional[NDArray[np.float64]] = None,
    ):
        self.grid = grid
        self.params = params or SchemeParams()
        base = thermo or default_thermo()
        self.thermo = truncate_U(base, self.params.delta) if self.params.delta > 0 else base
        self.quad = quad or SphereQuadrature.product_rule()
        self.settings = settings
        self.tolerances = tolerances or StepTolerances()
        if forcing is None:
            forcing = kolmogorov_forcing(grid, self.params.forcing_amplitude)
        self.forcing = np.asarray(forcing, dtype=np.float64)

        self.gamma_bar = self.thermo.gamma.upper
        self.mu_bar = self.thermo.mu.upper
        self.kappa_bar = self.thermo.kappa.upper
        self.floor_activations = 0
        self.log = StructuredLogger("nematic.solver")

    # -- pieces -------------------------------------------------------------------

    def gamma_field(self, theta: NDArray[np.float64]) -> NDArray[np.float64]:
        """[Gamma(theta)]_eps, mollified in space only."""
        return self.grid.mollify(np.asarray(self.thermo.gamma(theta)), self.params.epsilon)

    def assemble_H(self, state: State) -> MolecularField:
        return assemble_H(state, self.grid, self.params, self.thermo, self.quad, self.settings)

    def assemble_stress(self, state: State, H: NDArray[np.float64], **kwargs) -> NDArray[np.float64]:
        return assemble_stress(state, H, self.grid, self.params, self.thermo, **kwargs)

    def cfl(self, u: NDArray[np.float64]) -> float:
        speed = float(np.max(np.abs(u), initial=0.0))
        return speed * self.params.dt / self.grid.spacing

    def _implicit(self, coefficient: float, extra: int) -> NDArray[np.float64]:
        denominator = 1.0 + self.params.dt * coefficient * self.grid.k2
        return denominator.reshape(denominator.shape + (1,) * extra)

    def _advance(self, f: NDArray, rhs: NDArray, coefficient: float) -> NDArray:
        """(f_hat + dt dealias(rhs_hat)) / (1 + dt coefficient k^2)."""
        grid = self.grid
        extra = f.ndim - grid.dim
        f_hat = grid.forward(f) + self.params.dt * grid.dealias_hat(grid.forward(rhs))
        return grid.backward(f_hat / self._implicit(coefficient, extra))

    def check_domain(self, q: NDArray[np.float64]):
        """Eigenvalues of Q inside domain_bounds(quad, settings) everywhere."""
        require_in_domain(q_eigenvalues(q), self.quad, self.settings)

    # -- initial data -------------------------------------------------------------

    def prepare_initial(self, state: State) -> State:
        """Mollify the data with radius delta, project u and check admissibility.

        Only fresh starts go through here; a restart resumes the stored state.

        Raises:
            NonpositiveTemperature: theta_0 <= 0 somewhere
            DomainViolation: m is exact and Q_0 is not physical
        """
        grid = self.grid
        delta = self.params.delta
        u, _ = grid.leray_project(grid.mollify(state.u, delta))
        prepared = State(
            u=u,
            Q=grid.mollify(state.Q, delta),
            theta=grid.mollify(state.theta, delta),
            p=np.zeros(grid.shape),
            t=state.t,
            step=state.step,
        )
        require_positive(prepared.theta, "initial temperature")
        if self.params.exact:
            eval_f(prepared.Q, self.quad, self.settings)
        return prepared

    # -- one step -----------------------------------------------------------------

    @track_latency("step")
    def step(self, state: State) -> tuple[State, StepReport]:
        """Advance one IMEX step.

        Raises:
            CFLViolation: max|u| dt / spacing above the abort threshold
            DomainViolation: m is exact and Q left the physical domain
            TemperatureCollapse: min theta <= 0 after the heat update
            IncompressibilityLoss: div u above tolerance after projection
        """
        grid, params, tol = self.grid, self.params, self.tolerances
        u, q, theta = state.u, state.Q, state.theta
        require_positive(theta, f"step {state.step}")

        cfl = self.cfl(u)
        if cfl > tol.cfl_abort:
            raise CFLViolation(f"CFL number {cfl:.3g} exceeds {tol.cfl_abort} at step {state.step}")
        if cfl > tol.cfl_warn:
            self.log.warning("CFL above warning threshold", metadata={"cfl": cfl, "step": state.step})

        field = self.assemble_H(state)
        g = grid.velocity_gradient(u)
        s_matrix = stretching_matrix(g, q, params.xi)
        trace_residual = float(np.max(np.abs(np.trace(s_matrix, axis1=-2, axis2=-1)), initial=0.0))
        s = project_matrix(s_matrix)
        gamma = self.gamma_field(theta)

        # Q
        transport = np.einsum("...i,...ic->...c", u, field.grad_q)
        rhs_q = (
            -transport
            + s
            + gamma[..., None] * field.local
            + (gamma - self.gamma_bar)[..., None] * field.laplacian
        )
        q_new = self._advance(q, rhs_q, self.gamma_bar)

        # u and p
        sigma = self.assemble_stress(state, field.H, grad_u=g, grad_q=field.grad_q)
        advection = np.einsum("...ij,...j->...i", g, u)
        rhs_u = -advection + grid.divergence(sigma) + self.forcing - self.mu_bar * grid.laplacian(u)
        rhs_hat = grid.dealias_hat(grid.forward(rhs_u))
        solenoidal, _ = grid.leray_hat(grid.forward(u) + params.dt * rhs_hat)
        u_new = grid.backward(solenoidal / self._implicit(self.mu_bar, 1))
        _, potential = grid.leray_hat(rhs_hat)
        p_hat = -1j * potential
        p_hat[(0,) * grid.dim] = 0.0
        p_new = grid.backward(p_hat)

        # theta
        if params.frozen_temperature:
            theta_new = theta.copy()
        else:
            theta_new = self._advance(theta, self.heat_rhs(u_new, q, field.H, theta, gamma), self.kappa_bar)

        theta_min = float(np.min(theta_new))
        if not theta_min > 0:
            raise TemperatureCollapse(f"min theta = {theta_min:.6e} at step {state.step + 1}")
        floored = int(np.count_nonzero(theta_new < tol.theta_floor))
        if floored:
            theta_new = np.maximum(theta_new, tol.theta_floor)
            self.floor_activations += floored
            metrics.record_floor_activation(floored)

        div_residual = grid.max_divergence(u_new)
        if not div_residual <= tol.div_u:
            raise IncompressibilityLoss(f"div u = {div_residual:.3e} after projection at step {state.step + 1}")
        if params.exact:
            self.check_domain(q_new)

        newton = field.bulk.max_iterations
        metrics.record_newton(newton, "step")
        report = StepReport(
            step=state.step + 1,
            t=state.t + params.dt,
            stretching_trace=trace_residual,
            div_residual=div_residual,
            cfl=cfl,
            floor_activations=floored,
            newton_iters=newton,
        )
        new_state = State(u=u_new, Q=q_new, theta=theta_new, p=p_new, t=state.t + params.dt, step=state.step + 1)
        return new_state, report

    def heat_rhs(
        self,
        u: NDArray[np.float64],
        q: NDArray[np.float64],
        H: NDArray[np.float64],
        theta: NDArray[np.float64],
        gamma: NDArray[np.float64],
    ) -> NDArray[np.float64]:
        """Explicit part of the temperature update, Laplacian kappa_bar term removed."""
        grid, params = self.grid, self.params
        coupling = self.thermo.active_coupling
        order = self.thermo.order

        g = grid.velocity_gradient(u)
        s = stretching(g, q, params.xi)
        d_u = np.asarray(coupling.slope(theta))
        d2_u = np.asarray(coupling.curvature(theta))
        capacity = 1.0 + theta * d2_u * order.value(q)

        sym = g + np.swapaxes(g, -1, -2)
        source = (
            -theta * d_u * q_inner(order.gradient(q), s + gamma[..., None] * H)
            + 0.5 * np.asarray(self.thermo.mu(theta)) * np.einsum("...ij,...ij->...", sym, sym)
            + gamma * q_norm2(H)
        )
        if params.delta > 0:
            source += params.delta * np.einsum("...ij,...ij->...", g, g) ** (0.5 * params.r)

        grad_theta = grid.grad(theta)
        conduction = grid.divergence(np.asarray(self.thermo.kappa(theta))[..., None] * grad_theta)
        transport = np.einsum("...i,...i->...", u, grad_theta)
        return -transport + (conduction + source) / capacity - self.kappa_bar * grid.laplacian(theta)

    # -- time loop ----------------------------------------------------------------

    def record(self, state: State, field: Optional[MolecularField] = None) -> DiagnosticsRecord:
        return energy_report(state, self, field)

    def run(
        self,
        initial: State,
        n_steps: int,
        diag_every: int = 1,
        on_step: Optional[Callable[[State, StepReport], None]] = None,
    ) -> tuple[State, list[DiagnosticsRecord]]:
        """Advance n_steps, recording diagnostics every diag_every steps and at the end.

        Raises:
            SchemeFailure: from step, with `partial` set to a RunOutcome holding the
                last good state and the records so far
        """
        if n_steps < 0:
            raise ValueError(f"n_steps must be >= 0, got {n_steps}")
        if diag_every < 1:
            raise ValueError(f"diag_every must be >= 1, got {diag_every}")

        token = phase_ctx.set("run")
        state = initial
        records = [self.record(state)]
        momentum = self.grid.integrate(state.u)
        newton = 0
        reports: list[StepReport] = []
        self.log.info(
            "Run started",
            metadata={"steps": n_steps, "grid": repr(self.grid), "dt": self.params.dt, "m": self.params.m},
        )
        try:
            for i in range(n_steps):
                state, report = self.step(state)
                reports.append(report)
                newton = max(newton, report.newton_iters)
                if on_step is not None:
                    on_step(state, report)
                if state.step % diag_every == 0 or i == n_steps - 1:
                    previous = records[-1]
                    record = self.record(state)
                    current = self.grid.integrate(state.u)
                    elapsed = record.t - previous.t
                    momentum_residual = float(np.max(np.abs(
                        (current - momentum) / elapsed - self.grid.integrate(self.forcing)
                    )))
                    records.append(record.model_copy(update={
                        "energy_drift": abs(record.total_energy - records[0].total_energy),
                        "momentum_residual": momentum_residual,
                        "floor_activations": self.floor_activations,
                        "newton_iters_max": newton,
                    }))
                    momentum = current
                    newton = 0
                    logger.debug(f"Recorded step {state.step}: E={record.total_energy:.12e}")
        except SchemeFailure as e:
            metrics.record_error(e.category, "run")
            self.log.error(
                f"Run aborted at step {state.step}: {e}",
                error_category=e.category,
                metadata={"step": state.step, "t": state.t},
            )
            e.partial = RunOutcome(state=state, records=records, reports=reports, failure=e)
            raise
        finally:
            phase_ctx.reset(token)

        self.log.info("Run finished", metadata={"step": state.step, "t": state.t, "records": len(records)})
        return state, records

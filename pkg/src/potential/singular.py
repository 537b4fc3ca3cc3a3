"""
Singular maximum-entropy bulk potential and its Moreau envelopes.

f(Q) is the least value of the integral of rho log rho over probability
densities on the sphere whose second moment is Q + I/3. The minimizer is a
Boltzmann density exp(sum_j mu_j p_j^2) / Z in the eigenframe of Q, so f is
computed from the dual problem in the two gauge-fixed exponents.

The Moreau envelope f_m(q) = inf_P [f(P) + m/2 |q - P|^2] has the dual

    f_m(q) = max_mu  mu . lambda(q) - log Z(mu) - |mu|^2 / (2m),

which is the same Newton problem with an extra 1/m on the Hessian diagonal.
Its maximizer gives grad f_m = m (q - P*) directly.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field

from src.errors import DomainViolation, NoConvergence
from src.potential.quadrature import SphereQuadrature
from src.tensors.eigen import eigh_sym3
from src.tensors.qtensor import project_matrix, to_matrix

logger = logging.getLogger(__name__)

LOG_4PI = math.log(4.0 * math.pi)

# Orthonormal basis of {mu in R^3 : sum mu = 0}.
_TRACELESS_BASIS = np.array([
    [1.0 / math.sqrt(2.0), 1.0 / math.sqrt(6.0)],
    [-1.0 / math.sqrt(2.0), 1.0 / math.sqrt(6.0)],
    [0.0, -2.0 / math.sqrt(6.0)],
])

# d<p_i^2>/d mu_i along traceless directions at the uniform density; gives the
# small-Q starting point mu = 7.5 lambda.
_UNIFORM_RESPONSE = 2.0 / 15.0

_ARMIJO = 1e-4

# Distance kept from an eigenvalue bound that only the quadrature imposes;
# Newton does not resolve densities packed closer onto the extreme nodes.
UNRESOLVED_BAND = 1e-3


class PotentialSettings(BaseModel):
    """Newton controls for the dual solve."""
    model_config = ConfigDict(frozen=True)

    tol: float = Field(default=1e-12, gt=0)
    max_iter: int = Field(default=50, ge=1)
    margin: float = Field(default=1e-8, ge=1e-8, lt=1.0 / 3.0)
    chunk_size: int = Field(default=2048, ge=1)
    max_halvings: int = Field(default=30, ge=0)


DEFAULT_SETTINGS = PotentialSettings()


@dataclass
class DualSolution:
    exponents: NDArray[np.float64]  # (B, 3), each row sums to 0
    log_partition: NDArray[np.float64]  # (B,)
    residual: NDArray[np.float64]  # (B,) moment residual norm
    iterations: NDArray[np.int64]  # (B,)
    converged: NDArray[np.bool_]  # (B,)


@dataclass
class PotentialEval:
    """Potential value and traceless gradient, batched over the leading axes of q."""
    value: NDArray[np.float64]
    gradient: NDArray[np.float64]
    dual_exponents: NDArray[np.float64]
    newton_iters: NDArray[np.int64]
    converged: NDArray[np.bool_]
    proximal_point: Optional[NDArray[np.float64]] = None

    @property
    def max_iterations(self) -> int:
        return int(np.max(self.newton_iters, initial=0))


def _partition(mu: NDArray, quad: SphereQuadrature, with_covariance: bool = True):
    exponent = mu @ quad.squares.T
    top = exponent.max(axis=1, keepdims=True)
    weighted = quad.weights * np.exp(exponent - top)
    total = weighted.sum(axis=1)
    prob = weighted / total[:, None]
    log_z = top[:, 0] + np.log(total)
    moments = prob @ quad.squares
    if not with_covariance:
        return log_z, moments, None
    second = (prob @ quad.square_products).reshape(-1, 3, 3)
    covariance = second - moments[:, :, None] * moments[:, None, :]
    return log_z, moments, covariance


def _solve_chunk(lam: NDArray, quad: SphereQuadrature, inv_m: float, settings: PotentialSettings):
    basis = _TRACELESS_BASIS
    mu = lam / (_UNIFORM_RESPONSE + inv_m)
    mu -= mu.mean(axis=1, keepdims=True)

    log_z, moments, covariance = _partition(mu, quad)
    psi = log_z + 0.5 * inv_m * np.sum(mu ** 2, axis=1) - np.sum(mu * lam, axis=1)
    residual = moments - 1.0 / 3.0 - lam + inv_m * mu
    norm = np.linalg.norm(residual, axis=1)
    iterations = np.zeros(lam.shape[0], dtype=np.int64)

    for _ in range(settings.max_iter):
        active = np.flatnonzero(norm > settings.tol)
        if active.size == 0:
            break

        grad = residual[active] @ basis
        hess = np.einsum("ia,kij,jb->kab", basis, covariance[active], basis)
        hess += (inv_m + 1e-14) * np.eye(2)
        direction = -np.linalg.solve(hess, grad[..., None])[..., 0]
        step = direction @ basis.T
        slope = np.sum(grad * direction, axis=1)

        t = np.ones(active.size)
        pending = np.arange(active.size)
        for _ in range(settings.max_halvings + 1):
            rows = active[pending]
            trial = mu[rows] + t[pending, None] * step[pending]
            trial_log_z, trial_moments, trial_cov = _partition(trial, quad)
            trial_psi = (
                trial_log_z
                + 0.5 * inv_m * np.sum(trial ** 2, axis=1)
                - np.sum(trial * lam[rows], axis=1)
            )
            trial_residual = trial_moments - 1.0 / 3.0 - lam[rows] + inv_m * trial
            trial_norm = np.linalg.norm(trial_residual, axis=1)

            # Armijo on the dual objective, or plain residual decrease once the
            # objective differences drop below rounding.
            ok = (trial_psi <= psi[rows] + _ARMIJO * t[pending] * slope[pending]) | (trial_norm < norm[rows])
            accepted = rows[ok]
            mu[accepted] = trial[ok]
            log_z[accepted] = trial_log_z[ok]
            covariance[accepted] = trial_cov[ok]
            psi[accepted] = trial_psi[ok]
            residual[accepted] = trial_residual[ok]
            norm[accepted] = trial_norm[ok]

            pending = pending[~ok]
            if pending.size == 0:
                break
            t[pending] *= 0.5

        iterations[active] += 1

    return mu, log_z, norm, iterations


def solve_dual(
    eigenvalues: ArrayLike,
    quad: SphereQuadrature,
    inv_m: float = 0.0,
    settings: PotentialSettings = DEFAULT_SETTINGS,
) -> DualSolution:
    """Damped Newton for the gauge-fixed Boltzmann exponents.

    Args:
        eigenvalues: Eigenvalues of Q sorted descending, shape (B, 3)
        quad: Sphere quadrature; eigenvalue i is matched on squared axis i of quad.squares
        inv_m: 1/m for the Moreau envelope, 0 for the exact potential
        settings: Newton controls

    Returns:
        DualSolution with one row per input point
    """
    lam = np.asarray(eigenvalues, dtype=np.float64).reshape(-1, 3)
    lam = lam - lam.mean(axis=1, keepdims=True)
    count = lam.shape[0]

    exponents = np.zeros((count, 3))
    log_partition = np.zeros(count)
    residual = np.zeros(count)
    iterations = np.zeros(count, dtype=np.int64)

    for start in range(0, count, settings.chunk_size):
        stop = min(start + settings.chunk_size, count)
        mu, log_z, norm, iters = _solve_chunk(lam[start:stop], quad, inv_m, settings)
        exponents[start:stop] = mu
        log_partition[start:stop] = log_z
        residual[start:stop] = norm
        iterations[start:stop] = iters

    if count:
        logger.debug(f"Dual solve: {count} points, max {iterations.max()} Newton iterations, inv_m={inv_m}")

    return DualSolution(
        exponents=exponents,
        log_partition=log_partition,
        residual=residual,
        iterations=iterations,
        converged=residual <= settings.tol,
    )


def _require_convergence(solution: DualSolution, label: str):
    failed = int(np.count_nonzero(~solution.converged))
    if failed:
        worst = float(solution.residual.max())
        raise NoConvergence(
            f"{label}: Newton did not converge at {failed} point(s), max moment residual {worst:.3e}",
            failed=failed,
            max_residual=worst,
        )


def _assemble(q: NDArray, values: NDArray, vectors: NDArray, solution: DualSolution, inv_m: float) -> PotentialEval:
    batch = q.shape[:-1]
    mu = solution.exponents
    lam = values - values.mean(axis=1, keepdims=True)
    value = np.sum(mu * lam, axis=1) - solution.log_partition - 0.5 * inv_m * np.sum(mu ** 2, axis=1)

    if np.any(value < -LOG_4PI - 1e-10):
        raise NoConvergence(f"potential value {value.min():.12f} fell below -log(4 pi)")

    gradient = project_matrix(np.einsum("bij,bj,bkj->bik", vectors, mu, vectors))
    return PotentialEval(
        value=value.reshape(batch),
        gradient=gradient.reshape(batch + (5,)),
        dual_exponents=mu.reshape(batch + (3,)),
        newton_iters=solution.iterations.reshape(batch),
        converged=solution.converged.reshape(batch),
    )


def domain_bounds(quad: SphereQuadrature, settings: PotentialSettings = DEFAULT_SETTINGS) -> tuple[float, float]:
    """Open interval that the eigenvalues of Q must lie in for eval_f.

    The physical interval (-1/3, 2/3) less the margin, narrowed to what the
    quadrature's node densities can represent.
    """
    floor, ceiling = quad.eigenvalue_bounds
    if floor <= -1.0 / 3.0:
        lower = -1.0 / 3.0 + settings.margin
    else:
        lower = floor + max(settings.margin, UNRESOLVED_BAND)
    if ceiling >= 2.0 / 3.0:
        upper = 2.0 / 3.0 - settings.margin
    else:
        upper = ceiling - max(settings.margin, UNRESOLVED_BAND)
    return lower, upper


def require_in_domain(values: NDArray, quad: SphereQuadrature, settings: PotentialSettings = DEFAULT_SETTINGS):
    """Raise DomainViolation unless every row of sorted eigenvalues lies inside domain_bounds."""
    lower, upper = domain_bounds(quad, settings)
    values = np.asarray(values).reshape(-1, 3)
    outside = (values[:, 0] >= upper) | (values[:, 2] <= lower)
    if np.any(outside):
        overshoot = np.maximum(values[:, 0] - upper, lower - values[:, 2])
        raise DomainViolation(
            f"Q eigenvalues outside ({lower:.6f}, {upper:.6f}) at {int(outside.sum())} point(s)",
            count=int(outside.sum()),
            worst=float(overshoot.max()),
        )


def _eigenframe(q: NDArray):
    values, vectors = eigh_sym3(to_matrix(q))
    return values.reshape(-1, 3), vectors.reshape(-1, 3, 3)


def eval_f(
    q: ArrayLike,
    quad: SphereQuadrature,
    settings: PotentialSettings = DEFAULT_SETTINGS,
) -> PotentialEval:
    """Evaluate the singular potential and its traceless gradient.

    Args:
        q: QTensor components, shape (..., 5)
        quad: Sphere quadrature
        settings: Newton tolerance, iteration cap and domain margin

    Returns:
        PotentialEval batched like q

    Raises:
        DomainViolation: An eigenvalue lies outside domain_bounds(quad, settings)
        NoConvergence: Newton failed within max_iter
    """
    q = np.asarray(q, dtype=np.float64)
    values, vectors = _eigenframe(q)

    require_in_domain(values, quad, settings)

    solution = solve_dual(values, quad, 0.0, settings)
    _require_convergence(solution, "singular potential")
    return _assemble(q, values, vectors, solution, 0.0)


def eval_f_moreau(
    q: ArrayLike,
    m: float,
    quad: SphereQuadrature,
    settings: PotentialSettings = DEFAULT_SETTINGS,
) -> PotentialEval:
    """Evaluate the Moreau envelope f_m, defined for every traceless symmetric q.

    Returns:
        PotentialEval whose proximal_point is P* = q - grad / m
    """
    if not m > 0:
        raise ValueError(f"Moreau index must be positive, got {m}")
    if math.isinf(m):
        return eval_f(q, quad, settings)

    q = np.asarray(q, dtype=np.float64)
    values, vectors = _eigenframe(q)
    solution = solve_dual(values, quad, 1.0 / m, settings)
    _require_convergence(solution, f"Moreau envelope m={m}")
    result = _assemble(q, values, vectors, solution, 1.0 / m)
    result.proximal_point = q - result.gradient / m
    return result


def evaluate_bulk(
    q: ArrayLike,
    m: float,
    quad: SphereQuadrature,
    settings: PotentialSettings = DEFAULT_SETTINGS,
) -> PotentialEval:
    """f_m over a whole Q field; m = inf selects the exact potential."""
    if math.isinf(m):
        return eval_f(q, quad, settings)
    return eval_f_moreau(q, m, quad, settings)

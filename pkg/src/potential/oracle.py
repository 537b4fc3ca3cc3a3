"""
Brute-force primal reference for the singular potential.

Minimizes sum_k w_k rho_k log rho_k over quadrature-node densities subject to
normalization and the second-moment constraints of q, working in the frame q
is given in (no eigen-decomposition). The constrained minimizer over node
densities is exp(p^T M p) / Z for a full symmetric exponent M, so scipy
finds M and the primal objective is then read off the node density itself.
"""
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import minimize

from src.potential.quadrature import SphereQuadrature


@dataclass
class PrimalResult:
    entropy: float
    constraint_residual: float
    density: NDArray[np.float64]


def _node_features(nodes: NDArray) -> NDArray:
    # p^T to_matrix(c) p = features @ c for traceless components c.
    x, y, z = nodes[:, 0], nodes[:, 1], nodes[:, 2]
    return np.stack([x * x - z * z, y * y - z * z, 2 * x * y, 2 * x * z, 2 * y * z], axis=1)


def _targets(q: NDArray) -> NDArray:
    q11, q22, q12, q13, q23 = q
    return np.array([2 * q11 + q22, q11 + 2 * q22, 2 * q12, 2 * q13, 2 * q23])


def primal_entropy(q: ArrayLike, quad: SphereQuadrature, gtol: float = 1e-13) -> PrimalResult:
    """Entropy of the moment-matching node density for a single QTensor."""
    q = np.asarray(q, dtype=np.float64).reshape(5)
    features = _node_features(np.asarray(quad.nodes))
    target = _targets(q)
    weights = np.asarray(quad.weights)

    def density(c):
        e = features @ c
        top = e.max()
        unnormalized = np.exp(e - top)
        return unnormalized / (weights @ unnormalized)

    def objective(c):
        e = features @ c
        top = e.max()
        return top + np.log(weights @ np.exp(e - top)) - c @ target

    def jacobian(c):
        rho = density(c)
        return (weights * rho) @ features - target

    def hessian(c):
        rho = density(c)
        mean = (weights * rho) @ features
        second = features.T @ ((weights * rho)[:, None] * features)
        return second - np.outer(mean, mean)

    result = minimize(
        objective,
        np.zeros(5),
        jac=jacobian,
        hess=hessian,
        method="trust-exact",
        options={"gtol": gtol, "maxiter": 500},
    )
    rho = density(result.x)
    mass = weights * rho
    entropy = float(mass @ np.log(rho))
    residual = float(max(abs(mass.sum() - 1.0), np.max(np.abs(mass @ features - target))))
    return PrimalResult(entropy=entropy, constraint_residual=residual, density=rho)

"""
Product quadrature on the unit sphere.

Gauss-Legendre in cos(theta) times the uniform rule in phi. With n_theta and
n_phi nodes it integrates every polynomial in p of degree up to
min(2 n_theta - 1, n_phi - 1) exactly.
"""
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy.special import gammaln, roots_legendre


@dataclass(frozen=True, eq=False)
class SphereQuadrature:
    nodes: NDArray[np.float64]  # (N, 3) unit vectors
    weights: NDArray[np.float64]  # (N,) positive, sum 4 pi
    degree: int
    n_theta: int
    n_phi: int
    # Squared node coordinates ordered (z, x, y): the pole axis carries the
    # largest eigenvalue of Q, where the Gauss-Legendre nodes cluster.
    squares: NDArray[np.float64] = field(init=False, repr=False)
    square_products: NDArray[np.float64] = field(init=False, repr=False)

    def __post_init__(self):
        squares = self.nodes[:, [2, 0, 1]] ** 2
        products = (squares[:, :, None] * squares[:, None, :]).reshape(-1, 9)
        for array in (squares, products):
            array.setflags(write=False)
        object.__setattr__(self, "squares", squares)
        object.__setattr__(self, "square_products", products)

    @classmethod
    def product_rule(cls, n_theta: int = 32, n_phi: int = 64) -> "SphereQuadrature":
        if n_theta < 2 or n_phi < 3:
            raise ValueError(f"quadrature too coarse: n_theta={n_theta}, n_phi={n_phi}")
        z, wz = roots_legendre(n_theta)
        phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
        sin_theta = np.sqrt(1.0 - z ** 2)

        nodes = np.stack([
            np.outer(sin_theta, np.cos(phi)),
            np.outer(sin_theta, np.sin(phi)),
            np.outer(z, np.ones(n_phi)),
        ], axis=-1).reshape(-1, 3)
        weights = np.outer(wz, np.full(n_phi, 2.0 * np.pi / n_phi)).ravel()
        for array in (nodes, weights):
            array.setflags(write=False)

        return cls(
            nodes=nodes,
            weights=weights,
            degree=min(2 * n_theta - 1, n_phi - 1),
            n_theta=n_theta,
            n_phi=n_phi,
        )

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def eigenvalue_bounds(self) -> tuple[float, float]:
        """Least and greatest eigenvalue of Q that a node density can reach.

        Q eigenvalue i is matched on squared axis i of `squares`, so the
        largest one is capped by the node closest to the pole.
        """
        return float(self.squares[:, 2].min()) - 1.0 / 3.0, float(self.squares[:, 0].max()) - 1.0 / 3.0

    def integrate(self, values: NDArray[np.float64]) -> NDArray[np.float64]:
        """Integrate node values (..., N) over the sphere."""
        return np.asarray(values) @ self.weights


def sphere_moment(a: int, b: int, c: int) -> float:
    """Exact integral of x^a y^b z^c over the unit sphere."""
    if a % 2 or b % 2 or c % 2:
        return 0.0
    log_value = (
        gammaln((a + 1) / 2) + gammaln((b + 1) / 2) + gammaln((c + 1) / 2)
        - gammaln((a + b + c + 3) / 2)
    )
    return float(2.0 * np.exp(log_value))

"""
Thermal coupling functions, transport coefficients, and energy/entropy densities.

The free energy couples temperature to order through -U(theta) G(Q). U is
pluggable (square-root default, linear alternative) and can be replaced by a
bounded truncation U_delta for the regularized scheme.
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Protocol, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from src.errors import NonpositiveTemperature
from src.tensors.qtensor import project_matrix, q_norm2, random_rotations, to_matrix

logger = logging.getLogger(__name__)

Scalar = Union[float, NDArray[np.float64]]

# |Q|^2 of the extreme admissible Q, eigenvalues (2/3, -1/3, -1/3).
PHYSICAL_Q_NORM2 = 2.0 / 3.0


class CouplingPotential(Protocol):
    def value(self, theta: ArrayLike) -> Scalar: ...
    def slope(self, theta: ArrayLike) -> Scalar: ...
    def curvature(self, theta: ArrayLike) -> Scalar: ...


@dataclass(frozen=True)
class SqrtCoupling:
    """U(theta) = a - b sqrt(1 + theta), a > b > 0."""
    a: float = 2.0
    b: float = 1.0

    def value(self, theta):
        return self.a - self.b * np.sqrt(1.0 + np.asarray(theta, dtype=np.float64))

    def slope(self, theta):
        return -self.b / (2.0 * np.sqrt(1.0 + np.asarray(theta, dtype=np.float64)))

    def curvature(self, theta):
        return self.b / (4.0 * (1.0 + np.asarray(theta, dtype=np.float64)) ** 1.5)


@dataclass(frozen=True)
class LinearCoupling:
    """U(theta) = alpha (theta* - theta)."""
    alpha: float = 1.0
    theta_star: float = 1.0

    def value(self, theta):
        return self.alpha * (self.theta_star - np.asarray(theta, dtype=np.float64))

    def slope(self, theta):
        return np.full_like(np.asarray(theta, dtype=np.float64), -self.alpha)

    def curvature(self, theta):
        return np.zeros_like(np.asarray(theta, dtype=np.float64))


@dataclass(frozen=True)
class TruncatedCoupling:
    """U_delta: equal to U on [0, 1/delta], linear with slope U'(0) below 0.

    Beyond 1/delta a convex quadratic bends the slope up to zero over a
    further 1/delta, after which U_delta is constant. The result is C^1,
    convex, nonincreasing, and bounded on [0, inf).
    """
    base: CouplingPotential
    delta: float

    @property
    def cap(self) -> float:
        return 1.0 / self.delta

    def _pieces(self, theta):
        theta = np.asarray(theta, dtype=np.float64)
        inside = np.clip(theta, 0.0, self.cap)
        d = np.clip(theta - self.cap, 0.0, self.cap)
        return theta, inside, d

    def value(self, theta):
        theta, inside, d = self._pieces(theta)
        s = self.base.slope(self.cap)
        bent = self.base.value(self.cap) + s * d - s * d ** 2 / (2.0 * self.cap)
        below = self.base.value(0.0) + self.base.slope(0.0) * theta
        return np.where(theta <= 0.0, below, np.where(theta <= self.cap, self.base.value(inside), bent))

    def slope(self, theta):
        theta, inside, d = self._pieces(theta)
        s = self.base.slope(self.cap)
        return np.where(
            theta <= 0.0,
            self.base.slope(0.0),
            np.where(theta <= self.cap, self.base.slope(inside), s * (1.0 - d / self.cap)),
        )

    def curvature(self, theta):
        theta, inside, d = self._pieces(theta)
        s = self.base.slope(self.cap)
        bending = np.where(d < self.cap, -s / self.cap, 0.0)
        return np.where(theta < 0.0, 0.0, np.where(theta <= self.cap, self.base.curvature(inside), bending))


@dataclass(frozen=True)
class OrderCoupling:
    """G(Q) = g(|Q|^2) with g(x) = x, optionally capped smoothly above cutoff^2.

    The cap is a C^2 smoothstep transition of width cutoff^2 ending at the
    constant 1.5 cutoff^2.
    """
    cutoff: Optional[float] = None

    def _shape(self, x: NDArray):
        if self.cutoff is None:
            return x, np.ones_like(x)
        start = self.cutoff ** 2
        t = np.clip((x - start) / start, 0.0, 1.0)
        capped = start + start * (t - t ** 3 + 0.5 * t ** 4)
        value = np.where(x <= start, x, capped)
        derivative = np.where(x <= start, 1.0, 1.0 - 3.0 * t ** 2 + 2.0 * t ** 3)
        return value, derivative

    def value(self, q: ArrayLike) -> NDArray[np.float64]:
        value, _ = self._shape(q_norm2(q))
        return value

    def gradient(self, q: ArrayLike) -> NDArray[np.float64]:
        """L[dG/dQ] = 2 g'(|Q|^2) Q (already traceless)."""
        q = np.asarray(q, dtype=np.float64)
        _, derivative = self._shape(q_norm2(q))
        return 2.0 * derivative[..., None] * q

    def q_bound(self) -> float:
        """|Q| beyond which dG/dQ vanishes, or the physical bound without a cutoff."""
        if self.cutoff is None:
            return math.sqrt(PHYSICAL_Q_NORM2)
        return math.sqrt(2.0) * self.cutoff

    def gradient_bound(self) -> float:
        """max |dG/dQ| = max 2 g'(x) sqrt(x) over 0 <= x <= q_bound^2."""
        x = np.linspace(0.0, self.q_bound() ** 2, 4001)
        _, derivative = self._shape(x)
        return float(np.max(2.0 * derivative * np.sqrt(x)))


@dataclass(frozen=True)
class TransportCoefficient:
    """base (1 + variation tanh(theta / theta_ref - 1)), bounded in base (1 -/+ variation)."""
    base: float = 1.0
    variation: float = 0.0
    theta_ref: float = 1.0

    def __call__(self, theta: ArrayLike) -> NDArray[np.float64]:
        theta = np.asarray(theta, dtype=np.float64)
        if self.variation == 0.0:
            return np.full_like(theta, self.base)
        return self.base * (1.0 + self.variation * np.tanh(theta / self.theta_ref - 1.0))

    @property
    def lower(self) -> float:
        return self.base * (1.0 - self.variation)

    @property
    def upper(self) -> float:
        return self.base * (1.0 + self.variation)


@dataclass(frozen=True)
class ThermoFunctions:
    coupling: CouplingPotential
    order: OrderCoupling
    mu: TransportCoefficient
    kappa: TransportCoefficient
    gamma: TransportCoefficient
    coupling_delta: Optional[CouplingPotential] = None

    @property
    def active_coupling(self) -> CouplingPotential:
        """U_delta when truncated, U otherwise."""
        return self.coupling_delta if self.coupling_delta is not None else self.coupling


def default_thermo() -> ThermoFunctions:
    return ThermoFunctions(
        coupling=SqrtCoupling(),
        order=OrderCoupling(),
        mu=TransportCoefficient(),
        kappa=TransportCoefficient(),
        gamma=TransportCoefficient(),
    )


def truncate_U(thermo: ThermoFunctions, delta: float) -> ThermoFunctions:
    """Attach the bounded truncation U_delta of thermo.coupling."""
    if not delta > 0:
        raise ValueError(f"truncation needs delta > 0, got {delta}")
    return replace(thermo, coupling_delta=TruncatedCoupling(thermo.coupling, delta))


@dataclass
class ThermoEval:
    e_bulk: NDArray[np.float64]
    s: NDArray[np.float64]
    U: NDArray[np.float64]
    dU: NDArray[np.float64]
    G: NDArray[np.float64]


def require_positive(theta: ArrayLike, where: str = "temperature"):
    theta = np.asarray(theta)
    if np.any(~(theta > 0.0)):
        raise NonpositiveTemperature(f"{where}: min theta = {float(np.min(theta)):.6e} is not positive")


def eval_thermo(theta: ArrayLike, q: ArrayLike, thermo: ThermoFunctions) -> ThermoEval:
    """Thermal part of the energy and the entropy density at (theta, Q).

    e_bulk = -(U - theta U') G + theta; the caller adds f(Q) and |grad Q|^2 / 2.
    s = 1 + log theta + U' G. Uses U_delta when the functions are truncated.

    Raises:
        NonpositiveTemperature: theta <= 0 anywhere
    """
    theta = np.asarray(theta, dtype=np.float64)
    require_positive(theta)
    coupling = thermo.active_coupling
    u = np.asarray(coupling.value(theta))
    du = np.asarray(coupling.slope(theta))
    g = thermo.order.value(q)
    return ThermoEval(
        e_bulk=-(u - theta * du) * g + theta,
        s=1.0 + np.log(theta) + du * g,
        U=u,
        dU=du,
        G=g,
    )


def log_theta_grid(low: float = 1e-6, high: float = 1e6, count: int = 241) -> NDArray[np.float64]:
    return np.logspace(math.log10(low), math.log10(high), count)


def check_hypotheses(
    thermo: ThermoFunctions,
    theta_grid: Optional[NDArray[np.float64]] = None,
    seed: int = 0,
    samples: int = 32,
) -> list[str]:
    """Scan U, G and the transport coefficients for the structural hypotheses.

    Returns:
        Human-readable violations; empty when every check passes
    """
    theta = log_theta_grid() if theta_grid is None else np.asarray(theta_grid, dtype=np.float64)
    u = thermo.coupling
    violations = []

    if not float(u.value(0.0)) > 0:
        violations.append(f"U(0) = {float(u.value(0.0)):.4g} is not positive")
    if np.any(u.slope(theta) > 1e-14):
        violations.append("U' > 0 somewhere on the theta grid")
    if np.any(u.curvature(theta) < -1e-12):
        violations.append("U is not convex on the theta grid")

    # Growth checks: the scaled quantities must level off over the top decade.
    body, tail = theta[theta < theta[-1] / 10], theta[theta >= theta[-1] / 10]
    for label, scaled in (
        ("|U'| theta^(1/2)", lambda t: np.abs(u.slope(t)) * np.sqrt(t)),
        ("U'' theta^(3/2)", lambda t: np.abs(u.curvature(t)) * t ** 1.5),
    ):
        if body.size and tail.size and np.max(scaled(tail)) > 2.0 * np.max(scaled(body)) + 1e-12:
            violations.append(f"{label} is unbounded as theta grows")

    for name in ("mu", "kappa", "gamma"):
        coefficient: TransportCoefficient = getattr(thermo, name)
        values = coefficient(theta)
        if not coefficient.lower > 0:
            violations.append(f"{name} lower bound {coefficient.lower:.4g} is not positive")
        if np.any(values < coefficient.lower - 1e-12) or np.any(values > coefficient.upper + 1e-12):
            violations.append(f"{name} leaves its bounds on the theta grid")

    rng = np.random.default_rng(seed)
    q = project_matrix(rng.normal(scale=0.3, size=(samples, 3, 3)))
    rotations = random_rotations(rng, samples)
    rotated = project_matrix(rotations @ to_matrix(q) @ np.swapaxes(rotations, -1, -2))
    g = thermo.order.value(q)
    if np.any(g < 0):
        violations.append("G takes negative values")
    if np.max(np.abs(thermo.order.value(rotated) - g)) > 1e-12:
        violations.append("G is not rotation invariant")

    for message in violations:
        logger.warning(f"Thermo hypothesis: {message}")
    return violations


def positivity_rate_bound(thermo: ThermoFunctions, xi: float = 0.0) -> float:
    """Exponential rate lambda_bound for the temperature floor theta_min(t) >= theta_min(0) e^(-lambda t).

    Lambda = (Gamma_bar / 2) c_U^2 |dG|_max^2 + c_U^2 xi^2 K^2 / (4 mu_lower), with
    c_U = sup |U'| theta^(1/2) and K = 2 |dG|_max (|Q|_max^2 + 1/3)^(1/2) (1 + |Q|_max);
    the rate is Lambda kappa_bar / kappa_lower.
    """
    theta = log_theta_grid(1e-8, 1e8, 401)
    c_u = float(np.max(np.abs(thermo.active_coupling.slope(theta)) * np.sqrt(theta)))
    dg = thermo.order.gradient_bound()
    q_max = thermo.order.q_bound()
    k = 2.0 * dg * math.sqrt(q_max ** 2 + 1.0 / 3.0) * (1.0 + q_max)
    rate = 0.5 * thermo.gamma.upper * c_u ** 2 * dg ** 2 + c_u ** 2 * xi ** 2 * k ** 2 / (4.0 * thermo.mu.lower)
    return rate * thermo.kappa.upper / thermo.kappa.lower

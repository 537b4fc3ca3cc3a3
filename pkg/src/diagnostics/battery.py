"""
Identity and property battery behind the `check` subcommand.

Every suite draws from one seeded generator, so a given (seed, quick) pair
always produces the same residuals.
"""
import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from src.diagnostics.entropy import entropy_production_terms
from src.dynamics.models import SchemeParams
from src.dynamics.presets import build_initial_state
from src.dynamics.solver import NematicSolver
from src.errors import NematicError
from src.fields.grid import Grid
from src.observability import ErrorCategory, StructuredLogger, metrics, phase_ctx
from src.potential.oracle import primal_entropy
from src.potential.quadrature import SphereQuadrature
from src.potential.singular import LOG_4PI, eval_f, eval_f_moreau
from src.potential.thermo import check_hypotheses, default_thermo, eval_thermo
from src.tensors.kinematics import commutator_identity_check, odot, stretching_trace
from src.tensors.qtensor import (
    N_COMPONENTS,
    project_matrix,
    q_inner,
    q_norm2,
    random_admissible,
    random_rotations,
    to_matrix,
    traceless_project,
    uniaxial,
)

log = StructuredLogger("nematic.check")


@dataclass
class SuiteResult:
    name: str
    passed: bool
    max_residual: float
    detail: str = ""


def _symmetric(rng: np.random.Generator, count: int, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(scale=scale, size=(count, 3, 3))
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def _solenoidal_gradients(rng: np.random.Generator, count: int) -> np.ndarray:
    g = rng.normal(size=(count, 3, 3))
    return g - np.trace(g, axis1=-2, axis2=-1)[:, None, None] * np.eye(3) / 3.0


def tensor_identities(rng: np.random.Generator, quick: bool) -> SuiteResult:
    count = 200 if quick else 1000
    worst = {}
    for xi in (0.0, 0.5, 1.0):
        h = _symmetric(rng, count)
        q = rng.normal(scale=0.3, size=(count, N_COMPONENTS))
        g = _solenoidal_gradients(rng, count)
        worst[f"commutator(xi={xi})"] = float(np.max(commutator_identity_check(h, q, g, xi, relative=True)))
        worst[f"trace S(xi={xi})"] = float(np.max(np.abs(stretching_trace(g, q, xi))))

    h = _symmetric(rng, count)
    once = traceless_project(h)
    worst["idempotence"] = float(np.max(np.abs(project_matrix(to_matrix(once)) - once)))
    gq = rng.normal(size=(count, 3, N_COMPONENTS))
    gram = odot(gq)
    scale = np.max(np.abs(gram), axis=(-2, -1))
    worst["odot PSD"] = float(np.max(np.maximum(-np.linalg.eigvalsh(gram)[:, 0] / scale, 0.0)))

    limits = {"commutator": 1e-12, "trace S": 1e-14, "idempotence": 1e-15, "odot PSD": 1e-14}
    failed = [k for k, v in worst.items() if v > limits[k.split("(")[0]]]
    return SuiteResult(
        name="tensor-identities",
        passed=not failed,
        max_residual=max(worst.values()),
        detail="; ".join(f"{k}={v:.2e}" for k, v in worst.items() if k in failed) or f"{count} draws per check",
    )


def singular_potential(rng: np.random.Generator, quick: bool, quad: SphereQuadrature) -> SuiteResult:
    problems = []
    worst = 0.0

    origin = abs(float(eval_f(np.zeros(N_COMPONENTS), quad).value) + LOG_4PI)
    worst = max(worst, origin)
    if origin > 1e-10:
        problems.append(f"f(0) off by {origin:.2e}")

    pairs = 100 if quick else 500
    a = random_admissible(rng, pairs)
    b = random_admissible(rng, pairs)
    gap = eval_f(0.5 * (a + b), quad).value - 0.5 * (eval_f(a, quad).value + eval_f(b, quad).value)
    if np.max(gap) > 1e-8:
        problems.append(f"midpoint convexity gap {np.max(gap):.2e}")

    points = 20 if quick else 100
    q = random_admissible(rng, points, margin=0.1)
    analytic = eval_f(q, quad).gradient
    h = 1e-5
    numeric = np.zeros_like(analytic)
    for c in range(N_COMPONENTS):
        step = np.zeros(N_COMPONENTS)
        step[c] = h
        numeric[:, c] = (eval_f(q + step, quad).value - eval_f(q - step, quad).value) / (2.0 * h)
    unit = np.eye(N_COMPONENTS)
    projected = np.stack([q_inner(analytic, unit[c]) for c in range(N_COMPONENTS)], axis=-1)
    relative = np.linalg.norm(numeric - projected, axis=-1) / np.maximum(np.linalg.norm(projected, axis=-1), 1.0)
    worst = max(worst, float(np.max(relative)))
    if np.max(relative) > 1e-5:
        problems.append(f"gradient vs finite differences {np.max(relative):.2e}")

    oracle_points = 5 if quick else 20
    q = random_admissible(rng, oracle_points, margin=0.1)
    dual = eval_f(q, quad).value
    primal = np.array([primal_entropy(point, quad).entropy for point in q])
    mismatch = float(np.max(np.abs(dual - primal)))
    worst = max(worst, mismatch)
    if mismatch > 1e-6:
        problems.append(f"primal oracle mismatch {mismatch:.2e}")

    ray = eval_f(uniaxial(np.array([0.6, 0.65, 0.66, 0.8, 0.9]), np.array([0.0, 0.0, 1.0])), quad).value
    if not (np.all(np.isfinite(ray)) and np.all(np.diff(ray) > 0)):
        problems.append("f not increasing along the uniaxial ray")

    return SuiteResult(name="singular-potential", passed=not problems, max_residual=worst, detail="; ".join(problems))


def moreau_family(rng: np.random.Generator, quick: bool, quad: SphereQuadrature) -> SuiteResult:
    problems = []
    zero = np.zeros(N_COMPONENTS)
    f0 = float(eval_f(zero, quad).value)
    for m in (1.0, 10.0, 100.0):
        if float(eval_f_moreau(zero, m, quad).value) > f0 + 1e-12:
            problems.append(f"f_{m:g}(0) > f(0)")

    q = random_admissible(rng, 10 if quick else 50)
    f10 = eval_f_moreau(q, 10.0, quad).value
    f100 = eval_f_moreau(q, 100.0, quad).value
    exact = eval_f(q, quad).value
    order_gap = float(max(np.max(f10 - f100), np.max(f100 - exact)))
    if order_gap > 1e-10:
        problems.append(f"f_10 <= f_100 <= f broken by {order_gap:.2e}")

    outside_count = 3 if quick else 10
    spread = rng.uniform(-0.1, 0.1, size=outside_count)
    eigenvalues = np.stack([0.2 + spread, 0.2 - spread, np.full(outside_count, -0.4)], axis=-1)
    rotations = random_rotations(rng, outside_count)
    outside = project_matrix(np.einsum("kij,kj,klj->kil", rotations, eigenvalues, rotations))
    values = np.stack([eval_f_moreau(outside, m, quad).value for m in (1.0, 10.0, 100.0)])
    if not (np.all(np.isfinite(values)) and np.all(np.diff(values, axis=0) > 0)):
        problems.append("out-of-domain f_m not finite and increasing in m")

    lipschitz = 0.0
    pairs = 20 if quick else 100
    a = rng.normal(scale=0.3, size=(pairs, N_COMPONENTS))
    b = rng.normal(scale=0.3, size=(pairs, N_COMPONENTS))
    for m in (1.0, 10.0, 100.0):
        change = np.sqrt(q_norm2(eval_f_moreau(a, m, quad).gradient - eval_f_moreau(b, m, quad).gradient))
        ratio = change / (m * np.sqrt(q_norm2(a - b)))
        lipschitz = max(lipschitz, float(np.max(ratio)))
    if lipschitz > 1.0 + 1e-6:
        problems.append(f"gradient Lipschitz ratio {lipschitz:.6f} > 1")

    return SuiteResult(name="moreau-family", passed=not problems, max_residual=max(order_gap, 0.0), detail="; ".join(problems))


def _band_indices(small: int, big: int, band: int, half: bool):
    if half:
        k = np.arange(small // 2 + 1)
    else:
        k = np.fft.fftfreq(small, 1.0 / small).astype(int)
    keep = np.flatnonzero(np.abs(k) <= band)
    return keep, k[keep] % big


def dealias_product_error(grid: Grid, rng: np.random.Generator) -> float:
    """Dealiased grid product against the exact product spectrum on a doubled grid."""
    fine = Grid(2 * grid.n, grid.dim, workers=grid.workers)
    band = grid.n // 3
    indices = [_band_indices(grid.n, fine.n, band, axis == grid.dim - 1) for axis in range(grid.dim)]
    small = np.ix_(*[i[0] for i in indices])
    big = np.ix_(*[i[1] for i in indices])

    def refine(f):
        padded = np.zeros(fine.spectral_shape, dtype=complex)
        padded[big] = grid.forward(f)[small]
        return fine.backward(padded)

    f = grid.dealias(rng.normal(size=grid.shape))
    g = grid.dealias(rng.normal(size=grid.shape))
    f /= np.max(np.abs(f))
    g /= np.max(np.abs(g))

    exact = fine.forward(refine(f) * refine(g))[big]
    product = grid.forward(grid.dealias(f * g))
    kept = np.abs(product[small] - exact)
    outside = product.copy()
    outside[small] = 0.0
    return float(max(np.max(kept), np.max(np.abs(outside))))


def projector_layer(rng: np.random.Generator, quick: bool) -> SuiteResult:
    residuals = {}
    for dim, n in ((2, 32), (3, 16)) if quick else ((2, 64), (3, 32)):
        grid = Grid(n, dim)
        u = rng.normal(size=grid.shape + (3,))
        projected, _ = grid.leray_project(u)
        twice, _ = grid.leray_project(projected)
        residuals[f"idempotence {dim}d"] = float(np.max(np.abs(twice - projected)))
        residuals[f"divergence {dim}d"] = grid.max_divergence(projected)

        x = grid.coordinates()
        phi = np.cos(x[0]) * np.cos(x[1])
        gradient, _ = grid.leray_project(grid.grad(phi))
        residuals[f"gradient annihilation {dim}d"] = float(np.max(np.abs(gradient)))

        f = rng.normal(size=grid.shape)
        mean_square = float(np.mean(f ** 2))
        residuals[f"parseval {dim}d"] = abs(grid.spectral_energy(f) - mean_square) / mean_square
        residuals[f"dealias {dim}d"] = dealias_product_error(grid, rng)

    limits = {"idempotence": 1e-13, "divergence": 1e-12, "gradient annihilation": 1e-12, "parseval": 1e-11, "dealias": 1e-12}
    failed = [k for k, v in residuals.items() if v > limits[k.rsplit(" ", 1)[0]]]
    return SuiteResult(
        name="projector-layer",
        passed=not failed,
        max_residual=max(residuals.values()),
        detail="; ".join(f"{k}={residuals[k]:.2e}" for k in failed),
    )


def entropy_signs(rng: np.random.Generator, quick: bool, quad: SphereQuadrature) -> SuiteResult:
    grid = Grid(16 if quick else 32, 2)
    worst = 0.0
    problems = []
    for params in (SchemeParams(), SchemeParams(m=100.0, delta=1e-3, epsilon=0.05, r=3.2, xi=0.5)):
        solver = NematicSolver(grid, params, quad=quad)
        state = build_initial_state(
            grid,
            ("taylor-green-velocity", "uniaxial-seed", "hot-spot-theta"),
            amplitude=0.2,
            seed=int(rng.integers(1 << 31)),
        )
        state = solver.prepare_initial(state)
        field = solver.assemble_H(state)
        for name, density in entropy_production_terms(state, field.H, solver).items():
            low = float(np.min(density))
            worst = max(worst, -low)
            if low < -1e-10:
                problems.append(f"{name} channel reaches {low:.2e} (m={params.m:g})")
    return SuiteResult(name="entropy-signs", passed=not problems, max_residual=worst, detail="; ".join(problems))


def thermo_hypotheses(rng: np.random.Generator, quick: bool) -> SuiteResult:
    thermo = default_thermo()
    violations = check_hypotheses(thermo, seed=int(rng.integers(1 << 31)))

    theta = np.logspace(-4, 4, 200)
    q = random_admissible(rng, 8)
    for point in q:
        s = eval_thermo(theta, np.broadcast_to(point, theta.shape + (N_COMPONENTS,)), thermo).s
        if np.any(np.diff(s) <= 0):
            violations.append("entropy density not increasing in theta")
            break
    return SuiteResult(name="thermo-hypotheses", passed=not violations, max_residual=float(len(violations)), detail="; ".join(violations))


def run_property_battery(seed: int = 1234, quick: bool = False) -> list[SuiteResult]:
    """Run every suite; a suite that raises counts as failed."""
    rng = np.random.default_rng(seed)
    quad = SphereQuadrature.product_rule()
    suites: list[tuple[str, Callable[[], SuiteResult]]] = [
        ("tensor-identities", lambda: tensor_identities(rng, quick)),
        ("singular-potential", lambda: singular_potential(rng, quick, quad)),
        ("moreau-family", lambda: moreau_family(rng, quick, quad)),
        ("projector-layer", lambda: projector_layer(rng, quick)),
        ("entropy-signs", lambda: entropy_signs(rng, quick, quad)),
        ("thermo-hypotheses", lambda: thermo_hypotheses(rng, quick)),
    ]

    token = phase_ctx.set("check")
    results = []
    try:
        for name, suite in suites:
            start = time.perf_counter()
            try:
                result = suite()
            except NematicError as e:
                metrics.record_error(e.category, f"check.{name}")
                result = SuiteResult(name=name, passed=False, max_residual=math.inf, detail=str(e))
            duration_ms = (time.perf_counter() - start) * 1000
            metrics.record_latency(f"check.{name}", duration_ms, "ok" if result.passed else "failed")
            if result.passed:
                log.info(f"Suite {name} passed", duration_ms=duration_ms, metadata={"max_residual": result.max_residual})
            else:
                log.error(
                    f"Suite {name} failed: {result.detail}",
                    error_category=ErrorCategory.VALIDATION,
                    duration_ms=duration_ms,
                )
            results.append(result)
    finally:
        phase_ctx.reset(token)
    return results

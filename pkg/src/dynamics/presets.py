"""
Named initial-condition recipes.

Each preset modifies a State in place; a list of names is applied in order on
top of u = 0, Q = 0, theta = theta0.
"""
import logging
from typing import Callable, Iterable

import numpy as np

from src.dynamics.models import State
from src.fields.grid import Grid
from src.tensors.qtensor import q_norm2, uniaxial

logger = logging.getLogger(__name__)

NOISE_BAND = 4
HOT_SPOT_WIDTH = 0.5


def _equilibrium(state: State, grid: Grid, amplitude: float, rng: np.random.Generator):
    pass


def _isotropic_quench(state: State, grid: Grid, amplitude: float, rng: np.random.Generator):
    """Band-limited random Q with max |Q| = amplitude."""
    noise = rng.normal(size=grid.shape + (5,))
    low = np.all([np.abs(w) <= NOISE_BAND for w in grid.wavenumbers[:grid.dim]], axis=0)
    noise = grid.backward(grid.forward(noise) * low[..., None])
    peak = float(np.sqrt(np.max(q_norm2(noise))))
    if peak > 0:
        state.Q += amplitude * noise / peak


def _uniaxial_seed(state: State, grid: Grid, amplitude: float, rng: np.random.Generator):
    """Uniaxial Q with order amplitude and a director turning once along x2."""
    x2 = grid.coordinates()[1]
    director = np.stack([np.cos(x2), np.sin(x2), np.zeros_like(x2)], axis=-1)
    state.Q += uniaxial(np.full(grid.shape, amplitude), director)


def _taylor_green(state: State, grid: Grid, amplitude: float, rng: np.random.Generator):
    coords = grid.coordinates()
    x1, x2 = coords[0], coords[1]
    envelope = np.cos(coords[2]) if grid.dim == 3 else 1.0
    state.u[..., 0] += amplitude * np.sin(x1) * np.cos(x2) * envelope
    state.u[..., 1] -= amplitude * np.cos(x1) * np.sin(x2) * envelope


def _hot_spot(state: State, grid: Grid, amplitude: float, rng: np.random.Generator):
    """Gaussian bump of relative height amplitude centred in the box."""
    r2 = sum(x ** 2 for x in grid.coordinates())
    base = state.theta.copy()
    state.theta += amplitude * base * np.exp(-r2 / (2.0 * HOT_SPOT_WIDTH ** 2))


PRESETS: dict[str, Callable] = {
    "equilibrium": _equilibrium,
    "isotropic-quench": _isotropic_quench,
    "uniaxial-seed": _uniaxial_seed,
    "taylor-green-velocity": _taylor_green,
    "hot-spot-theta": _hot_spot,
}


def build_initial_state(
    grid: Grid,
    presets: Iterable[str] = ("equilibrium",),
    amplitude: float = 0.1,
    theta0: float = 1.0,
    seed: int = 0,
) -> State:
    """Compose the named presets in order.

    Raises:
        ValueError: Unknown preset name
    """
    rng = np.random.default_rng(seed)
    state = State.zeros(grid.shape, theta0)
    for name in presets:
        if name not in PRESETS:
            raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
        PRESETS[name](state, grid, amplitude, rng)
        logger.debug(f"Applied preset {name} (amplitude={amplitude}, seed={seed})")
    return state


def kolmogorov_forcing(grid: Grid, amplitude: float) -> np.ndarray:
    """Static body force A sin(x2) e1."""
    g = grid.zeros(3)
    if amplitude:
        g[..., 0] = amplitude * np.sin(grid.coordinates()[1])
    return g

"""
Periodic grid on the flat torus [-pi, pi)^dim and its spectral operators.

Fields are real ndarrays of shape (*grid, *value_shape): scalars (*grid,),
vectors (*grid, 3), QTensors (*grid, 5), gradient blocks (*grid, 3, ...).
In 2-D slice mode vectors keep three components and d/dx3 is zero.

Transforms use scipy.fft real transforms with norm="forward", so spectral
coefficients are Fourier amplitudes and mean(f^2) = sum_k w_k |f_k|^2.
Derivative wavenumbers drop the Nyquist mode, which makes
laplacian == divergence(grad) exactly.
"""
import logging
import os
from typing import Optional

import numpy as np
import scipy.fft
from dotenv import load_dotenv
from numpy.typing import NDArray

load_dotenv()

logger = logging.getLogger(__name__)

Field = NDArray[np.float64]


def fft_workers() -> int:
    return max(1, int(os.getenv("NEMATIC_THREADS", "1")))


class Grid:
    """Uniform periodic grid with n points per dimension."""

    def __init__(self, n: int, dim: int = 3, workers: Optional[int] = None):
        if dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {dim}")
        if n < 8 or n & (n - 1):
            raise ValueError(f"n must be a power of two >= 8, got {n}")

        self.n = n
        self.dim = dim
        self.spacing = 2.0 * np.pi / n
        self.shape = (n,) * dim
        self.axes = tuple(range(dim))
        self.cell_volume = self.spacing ** dim
        self.volume = (2.0 * np.pi) ** dim
        self.workers = workers if workers is not None else fft_workers()

        full = np.fft.fftfreq(n, 1.0 / n)
        half = np.fft.rfftfreq(n, 1.0 / n)
        mesh = list(np.meshgrid(*([full] * (dim - 1) + [half]), indexing="ij"))
        self.spectral_shape = mesh[0].shape
        if dim == 2:
            mesh.append(np.zeros(self.spectral_shape))

        nyquist = n // 2
        self.wavenumbers = tuple(mesh)
        self.k = tuple(np.where(np.abs(w) == nyquist, 0.0, w) for w in mesh)
        self.k2 = sum(k * k for k in self.k)
        self.k2_safe = np.where(self.k2 == 0.0, 1.0, self.k2)
        self.kabs2 = sum(w * w for w in mesh)
        self.dealias_mask = np.all([np.abs(w) <= n / 3.0 for w in mesh[:dim]], axis=0)

        # Half-spectrum multiplicity of each stored mode for Parseval sums.
        last = np.abs(mesh[dim - 1])
        self.parseval_weights = np.where((last == 0) | (last == nyquist), 1.0, 2.0)

        logger.debug(f"Grid initialized: n={n}, dim={dim}, workers={self.workers}")

    def __repr__(self) -> str:
        return f"Grid(n={self.n}, dim={self.dim})"

    def _expand(self, a: NDArray, extra: int) -> NDArray:
        return a.reshape(a.shape + (1,) * extra)

    def forward(self, f: Field) -> NDArray[np.complex128]:
        return scipy.fft.rfftn(f, axes=self.axes, norm="forward", workers=self.workers)

    def backward(self, f_hat: NDArray[np.complex128]) -> Field:
        return scipy.fft.irfftn(f_hat, s=self.shape, axes=self.axes, norm="forward", workers=self.workers)

    def coordinates(self) -> tuple[Field, ...]:
        x = -np.pi + self.spacing * np.arange(self.n)
        return tuple(np.meshgrid(*([x] * self.dim), indexing="ij"))

    def zeros(self, *value_shape: int) -> Field:
        return np.zeros(self.shape + tuple(value_shape))

    # -- differential operators -------------------------------------------------

    def grad_hat(self, f_hat: NDArray, extra: int) -> NDArray:
        """Spectral gradient; the derivative axis is inserted right after the grid axes."""
        return np.stack([1j * self._expand(k, extra) * f_hat for k in self.k], axis=self.dim)

    def grad(self, f: Field) -> Field:
        """Spectral gradient: (*grid, *vs) -> (*grid, 3, *vs), exact for resolved modes."""
        extra = f.ndim - self.dim
        return self.backward(self.grad_hat(self.forward(f), extra))

    def divergence_hat(self, f_hat: NDArray) -> NDArray:
        extra = f_hat.ndim - self.dim - 1
        return sum(1j * self._expand(k, extra) * f_hat[..., j] for j, k in enumerate(self.k))

    def divergence(self, f: Field) -> Field:
        """Contract the last (size-3) axis with d/dx: out[..., i] = sum_j d_j f[..., i, j]."""
        return self.backward(self.divergence_hat(self.forward(f)))

    def laplacian(self, f: Field) -> Field:
        extra = f.ndim - self.dim
        return self.backward(-self._expand(self.k2, extra) * self.forward(f))

    def velocity_gradient(self, u: Field) -> Field:
        """g[..., i, j] = du_i/dx_j."""
        return np.swapaxes(self.grad(u), -1, -2)

    # -- projections and filters ------------------------------------------------

    def leray_hat(self, u_hat: NDArray) -> tuple[NDArray, NDArray]:
        """Split spectral vectors into (solenoidal part, k . u_hat / |k|^2)."""
        k_dot_u = sum(k[..., None] * u_hat[..., j:j + 1] for j, k in enumerate(self.k))[..., 0]
        potential = k_dot_u / self.k2_safe
        gradient_part = np.stack([k * potential for k in self.k], axis=-1)
        return u_hat - gradient_part, potential

    def leray_project(self, u: Field) -> tuple[Field, Field]:
        """Helmholtz split of a vector field.

        Returns:
            (divergence-free part, gradient complement); the complement is the
            pressure gradient of the momentum equation
        """
        u_hat = self.forward(u)
        solenoidal, _ = self.leray_hat(u_hat)
        return self.backward(solenoidal), self.backward(u_hat - solenoidal)

    def mollify(self, f: Field, radius: float) -> Field:
        """Gaussian spectral multiplier exp(-radius^2 |k|^2 / 2); radius 0 is the identity."""
        if radius < 0:
            raise ValueError(f"mollification radius must be >= 0, got {radius}")
        if radius == 0:
            return np.array(f, dtype=np.float64, copy=True)
        extra = f.ndim - self.dim
        multiplier = np.exp(-0.5 * radius ** 2 * self.kabs2)
        return self.backward(self._expand(multiplier, extra) * self.forward(f))

    def dealias_hat(self, f_hat: NDArray) -> NDArray:
        return f_hat * self._expand(self.dealias_mask, f_hat.ndim - self.dim)

    def dealias(self, f: Field) -> Field:
        """Zero every mode with some |k_i| > n/3."""
        return self.backward(self.dealias_hat(self.forward(f)))

    # -- integrals --------------------------------------------------------------

    def integrate(self, f: Field) -> NDArray[np.float64]:
        """Grid integral over the torus, per value component."""
        return np.sum(f, axis=self.axes) * self.cell_volume

    def spectral_energy(self, f: Field) -> float:
        """sum_k w_k |f_k|^2 over all components; equals mean(f^2) by Parseval."""
        f_hat = self.forward(f)
        weights = self._expand(self.parseval_weights, f.ndim - self.dim)
        return float(np.sum(weights * np.abs(f_hat) ** 2))

    def max_divergence(self, u: Field) -> float:
        return float(np.max(np.abs(self.divergence(u)), initial=0.0))

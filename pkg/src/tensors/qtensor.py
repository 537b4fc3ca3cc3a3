"""
Symmetric traceless 3x3 tensors stored as five components.

A QTensor (or a whole field of them) is an ndarray whose last axis holds
(q11, q22, q12, q13, q23); q33 = -(q11 + q22) is implied, so symmetry and
tracelessness hold by construction. Every function here broadcasts over the
leading axes, which is how fields use them.

Double contraction ``A : B`` is the Frobenius product sum_ij A_ij B_ij. The
rank-3 ``::`` contraction used for gradient blocks is the same componentwise
sum taken over all three indices.
"""
import numpy as np
from numpy.typing import ArrayLike, NDArray

from src.errors import NonSymmetricTensor

QTensor = NDArray[np.float64]
Matrix3 = NDArray[np.float64]

N_COMPONENTS = 5
Q11, Q22, Q12, Q13, Q23 = range(N_COMPONENTS)

IDENTITY = np.eye(3)

SYMMETRY_TOLERANCE = 1e-12


def to_matrix(q: ArrayLike) -> Matrix3:
    """Expand (..., 5) components into full (..., 3, 3) matrices."""
    q = np.asarray(q, dtype=np.float64)
    m = np.empty(q.shape[:-1] + (3, 3))
    m[..., 0, 0] = q[..., Q11]
    m[..., 1, 1] = q[..., Q22]
    m[..., 2, 2] = -(q[..., Q11] + q[..., Q22])
    m[..., 0, 1] = m[..., 1, 0] = q[..., Q12]
    m[..., 0, 2] = m[..., 2, 0] = q[..., Q13]
    m[..., 1, 2] = m[..., 2, 1] = q[..., Q23]
    return m


def _components(m: Matrix3) -> QTensor:
    """Traceless part of a (numerically) symmetric matrix, off-diagonals averaged."""
    shift = np.trace(m, axis1=-2, axis2=-1) / 3.0
    q = np.empty(m.shape[:-2] + (N_COMPONENTS,))
    q[..., Q11] = m[..., 0, 0] - shift
    q[..., Q22] = m[..., 1, 1] - shift
    q[..., Q12] = 0.5 * (m[..., 0, 1] + m[..., 1, 0])
    q[..., Q13] = 0.5 * (m[..., 0, 2] + m[..., 2, 0])
    q[..., Q23] = 0.5 * (m[..., 1, 2] + m[..., 2, 1])
    return q


def is_symmetric(h: ArrayLike) -> bool:
    h = np.asarray(h, dtype=np.float64)
    scale = max(1.0, float(np.max(np.abs(h), initial=0.0)))
    return bool(np.all(np.abs(h - np.swapaxes(h, -1, -2)) <= SYMMETRY_TOLERANCE * scale))


def traceless_project(h: ArrayLike) -> QTensor:
    """Return L[h] = h - (tr h / 3) I as components.

    Args:
        h: Symmetric matrix or batch of matrices, shape (..., 3, 3)

    Returns:
        QTensor components, shape (..., 5)

    Raises:
        NonSymmetricTensor: If h is not symmetric
    """
    h = np.asarray(h, dtype=np.float64)
    if h.shape[-2:] != (3, 3):
        raise ValueError(f"expected (..., 3, 3) matrices, got shape {h.shape}")
    if not is_symmetric(h):
        raise NonSymmetricTensor("traceless projection needs a symmetric matrix")
    return _components(h)


def project_matrix(m: ArrayLike) -> QTensor:
    """L[sym(m)] without the symmetry check; for internally built matrices."""
    return _components(np.asarray(m, dtype=np.float64))


def q_inner(a: ArrayLike, b: ArrayLike) -> NDArray[np.float64]:
    """Frobenius product A : B of two QTensors given by components."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return (
        a[..., Q11] * b[..., Q11]
        + a[..., Q22] * b[..., Q22]
        + (a[..., Q11] + a[..., Q22]) * (b[..., Q11] + b[..., Q22])
        + 2.0 * (a[..., Q12] * b[..., Q12] + a[..., Q13] * b[..., Q13] + a[..., Q23] * b[..., Q23])
    )


def q_norm2(a: ArrayLike) -> NDArray[np.float64]:
    return q_inner(a, a)


def uniaxial(s: float, director: ArrayLike) -> QTensor:
    """s (n (x) n - I/3) for a director n (normalized here)."""
    n = np.asarray(director, dtype=np.float64)
    n = n / np.linalg.norm(n, axis=-1, keepdims=True)
    outer = n[..., :, None] * n[..., None, :]
    return _components(np.asarray(s)[..., None, None] * (outer - IDENTITY / 3.0))


def random_rotations(rng: np.random.Generator, count: int) -> NDArray[np.float64]:
    """Haar-distributed rotation matrices, shape (count, 3, 3)."""
    q, r = np.linalg.qr(rng.normal(size=(count, 3, 3)))
    q = q * np.sign(np.diagonal(r, axis1=-2, axis2=-1))[:, None, :]
    flip = np.linalg.det(q) < 0
    q[flip, :, 0] *= -1.0
    return q


def random_admissible(rng: np.random.Generator, count: int, margin: float = 0.05) -> QTensor:
    """Random QTensors with eigenvalues in (-1/3 + margin, 2/3 - 2 margin), random frames."""
    shrink = 1.0 - 3.0 * margin
    eigenvalues = shrink * (rng.dirichlet(np.ones(3), size=count) - 1.0 / 3.0)
    rotations = random_rotations(rng, count)
    m = np.einsum("kij,kj,klj->kil", rotations, eigenvalues, rotations)
    return _components(m)

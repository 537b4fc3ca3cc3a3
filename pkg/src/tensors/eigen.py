"""
Closed-form eigen-decomposition of batches of real symmetric 3x3 matrices.

Eigenvalues start from the trigonometric formula. The eigenvector of the
best-separated eigenvalue comes from the largest cross product of two rows of
A - lambda I; the other two are an exact 2x2 rotation inside its orthogonal
complement, which keeps double and triple eigenvalues well defined. Final
eigenvalues are Rayleigh quotients of the returned orthonormal frame.
"""
import numpy as np
from numpy.typing import ArrayLike, NDArray

from src.tensors.qtensor import to_matrix

_EYE = np.eye(3)


def _trig_eigenvalues(a: NDArray[np.float64]) -> NDArray[np.float64]:
    q = np.trace(a, axis1=-2, axis2=-1) / 3.0
    off = a[:, 0, 1] ** 2 + a[:, 0, 2] ** 2 + a[:, 1, 2] ** 2
    dev = np.diagonal(a, axis1=-2, axis2=-1) - q[:, None]
    p = np.sqrt((np.sum(dev ** 2, axis=1) + 2.0 * off) / 6.0)
    safe_p = np.where(p > 0.0, p, 1.0)
    b = (a - q[:, None, None] * _EYE) / safe_p[:, None, None]
    # In exact arithmetic -1 <= r <= 1; roundoff can leave it slightly outside.
    r = np.clip(np.linalg.det(b) / 2.0, -1.0, 1.0)
    phi = np.arccos(r) / 3.0
    high = q + 2.0 * p * np.cos(phi)
    low = q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)
    mid = 3.0 * q - high - low
    return np.stack([high, mid, low], axis=1)


def _null_vector(m: NDArray[np.float64]) -> NDArray[np.float64]:
    rows = (m[:, 0], m[:, 1], m[:, 2])
    crosses = np.stack([
        np.cross(rows[0], rows[1]),
        np.cross(rows[0], rows[2]),
        np.cross(rows[1], rows[2]),
    ], axis=1)
    norms = np.linalg.norm(crosses, axis=2)
    best = np.argmax(norms, axis=1)
    index = np.arange(m.shape[0])
    v = crosses[index, best]
    n = norms[index, best]
    # A multiple of the identity: every direction is an eigenvector.
    degenerate = n <= np.finfo(float).tiny
    v = np.where(degenerate[:, None], _EYE[0], v / np.where(degenerate, 1.0, n)[:, None])
    return v


def _complement(v: NDArray[np.float64]) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    axis = _EYE[np.argmin(np.abs(v), axis=1)]
    u1 = np.cross(v, axis)
    u1 /= np.linalg.norm(u1, axis=1, keepdims=True)
    u2 = np.cross(v, u1)
    return u1, u2


def eigh_sym3(a: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Eigen-decompose symmetric 3x3 matrices.

    Args:
        a: Symmetric matrices, shape (..., 3, 3)

    Returns:
        (eigenvalues sorted descending (..., 3), eigenvectors as columns (..., 3, 3))
    """
    a = np.asarray(a, dtype=np.float64)
    batch = a.shape[:-2]
    a = a.reshape(-1, 3, 3)

    guess = _trig_eigenvalues(a)
    upper_gap = guess[:, 0] - guess[:, 1]
    lower_gap = guess[:, 1] - guess[:, 2]
    lead = np.where(upper_gap >= lower_gap, guess[:, 0], guess[:, 2])

    v = _null_vector(a - lead[:, None, None] * _EYE)
    u1, u2 = _complement(v)

    au1 = np.einsum("bij,bj->bi", a, u1)
    au2 = np.einsum("bij,bj->bi", a, u2)
    p = np.sum(u1 * au1, axis=1)
    b = np.sum(u1 * au2, axis=1)
    c = np.sum(u2 * au2, axis=1)
    angle = 0.5 * np.arctan2(2.0 * b, p - c)
    cos, sin = np.cos(angle)[:, None], np.sin(angle)[:, None]
    w1 = cos * u1 + sin * u2
    w2 = -sin * u1 + cos * u2

    vectors = np.stack([v, w1, w2], axis=-1)
    values = np.einsum("bki,bkl,bli->bi", vectors, a, vectors)
    order = np.argsort(-values, axis=1, kind="stable")
    values = np.take_along_axis(values, order, axis=1)
    vectors = np.take_along_axis(vectors, order[:, None, :], axis=2)
    return values.reshape(batch + (3,)), vectors.reshape(batch + (3, 3))


def q_eigenvalues(q: ArrayLike) -> NDArray[np.float64]:
    """Eigenvalues (descending) of QTensor components (..., 5)."""
    values, _ = eigh_sym3(to_matrix(q))
    return values

"""
Kinematic tensors built from the velocity gradient.

VelGrad convention: g[..., i, j] = du_i / dx_j, so (g . x)_i is the velocity
increment and Q : g = Q_ij du_i/dx_j.
"""
import numpy as np
from numpy.typing import ArrayLike, NDArray

from src.errors import NonSymmetricTensor
from src.tensors.qtensor import IDENTITY, QTensor, is_symmetric, project_matrix, to_matrix

VelGrad = NDArray[np.float64]


def strain(g: ArrayLike) -> NDArray[np.float64]:
    g = np.asarray(g, dtype=np.float64)
    return 0.5 * (g + np.swapaxes(g, -1, -2))


def vorticity(g: ArrayLike) -> NDArray[np.float64]:
    g = np.asarray(g, dtype=np.float64)
    return 0.5 * (g - np.swapaxes(g, -1, -2))


def _contract(a: NDArray, b: NDArray) -> NDArray[np.float64]:
    return np.einsum("...ij,...ij->...", a, b)


def stretching_matrix(g: ArrayLike, q: ArrayLike, xi: float) -> NDArray[np.float64]:
    """S before re-projection.

    S = (xi e + w)(Q + I/3) + (Q + I/3)(xi e - w) - 2 xi (Q + I/3)(Q : g).
    Its trace is (2 xi / 3) div u, so it is traceless only for solenoidal g.
    """
    g = np.asarray(g, dtype=np.float64)
    qm = to_matrix(q)
    shifted = qm + IDENTITY / 3.0
    e = strain(g)
    w = vorticity(g)
    alignment = _contract(qm, g)[..., None, None]
    return (
        (xi * e + w) @ shifted
        + shifted @ (xi * e - w)
        - 2.0 * xi * shifted * alignment
    )


def stretching(g: ArrayLike, q: ArrayLike, xi: float) -> QTensor:
    """Stretching tensor S(grad u, Q) re-projected onto traceless symmetric tensors."""
    return project_matrix(stretching_matrix(g, q, xi))


def stretching_trace(g: ArrayLike, q: ArrayLike, xi: float) -> NDArray[np.float64]:
    """Pre-projection trace of S; the residual the re-projection removes."""
    return np.trace(stretching_matrix(g, q, xi), axis1=-2, axis2=-1)


def odot(gq: ArrayLike) -> NDArray[np.float64]:
    """(grad Q (.) grad Q)_ij = sum_kl dQ_kl/dx_i dQ_kl/dx_j.

    Args:
        gq: Gradient block, shape (..., 3, 5): derivative direction then Q component

    Returns:
        Symmetric positive semidefinite (..., 3, 3) Gram matrix
    """
    full = to_matrix(gq)
    return np.einsum("...ikl,...jkl->...ij", full, full)


def commutator_identity_check(
    h: ArrayLike,
    q: ArrayLike,
    g: ArrayLike,
    xi: float,
    relative: bool = False,
) -> NDArray[np.float64]:
    """Residual of -H : S = (QH - HQ) : g + 2 xi (H:Q)(Q:g) - xi [H(Q+I/3) + (Q+I/3)H] : g.

    The identity needs tr H = 0 whenever Q : g is nonzero, so the trace part of
    the supplied symmetric H is removed first.

    Args:
        h: Symmetric matrix (..., 3, 3)
        q: QTensor components (..., 5)
        g: Velocity gradient (..., 3, 3)
        xi: Alignment parameter
        relative: Divide by the largest term magnitude

    Returns:
        Absolute (or relative) residual, shape (...)
    """
    h = np.asarray(h, dtype=np.float64)
    if not is_symmetric(h):
        raise NonSymmetricTensor("commutator identity needs a symmetric H")
    hm = to_matrix(project_matrix(h))
    g = np.asarray(g, dtype=np.float64)
    qm = to_matrix(q)
    shifted = qm + IDENTITY / 3.0

    lhs = -_contract(hm, stretching_matrix(g, q, xi))
    commutator = _contract(qm @ hm - hm @ qm, g)
    alignment = 2.0 * xi * _contract(hm, qm) * _contract(qm, g)
    anticommutator = -xi * _contract(hm @ shifted + shifted @ hm, g)
    residual = np.abs(lhs - (commutator + alignment + anticommutator))

    if not relative:
        return residual
    scale = np.maximum.reduce([np.abs(lhs), np.abs(commutator), np.abs(alignment), np.abs(anticommutator)])
    return residual / np.maximum(scale, np.finfo(float).tiny)


def material_derivative(q_t: ArrayLike, u: ArrayLike, gq: ArrayLike, s: ArrayLike) -> QTensor:
    """dQ/dt + u . grad Q - S, componentwise."""
    transport = np.einsum("...i,...ic->...c", np.asarray(u, dtype=np.float64), np.asarray(gq, dtype=np.float64))
    return np.asarray(q_t, dtype=np.float64) + transport - np.asarray(s, dtype=np.float64)

# tests/test_tensors.py
import numpy as np
import pytest

from src.errors import NonSymmetricTensor
from src.tensors.eigen import eigh_sym3, q_eigenvalues
from src.tensors.kinematics import (
    commutator_identity_check,
    material_derivative,
    odot,
    stretching,
    stretching_trace,
)
from src.tensors.qtensor import (
    project_matrix,
    q_inner,
    q_norm2,
    random_admissible,
    to_matrix,
    traceless_project,
    uniaxial,
)


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def test_components_expand_to_traceless_symmetric(rng):
    m = to_matrix(rng.normal(size=(10, 5)))
    assert np.allclose(m, np.swapaxes(m, -1, -2))
    assert np.max(np.abs(np.trace(m, axis1=-2, axis2=-1))) == 0.0


def test_traceless_project_removes_trace():
    h = np.diag([3.0, 1.0, 2.0])
    q = traceless_project(h)
    assert np.allclose(to_matrix(q), np.diag([1.0, -1.0, 0.0]))


def test_traceless_project_rejects_nonsymmetric():
    h = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    with pytest.raises(NonSymmetricTensor):
        traceless_project(h)


def test_q_inner_is_frobenius(rng):
    a, b = rng.normal(size=(2, 20, 5))
    expected = np.einsum("...ij,...ij->...", to_matrix(a), to_matrix(b))
    assert np.allclose(q_inner(a, b), expected, atol=1e-14)


def test_uniaxial_eigenvalues():
    values = q_eigenvalues(uniaxial(0.5, [0.0, 0.0, 2.0]))
    assert np.allclose(values, [1.0 / 3.0, -1.0 / 6.0, -1.0 / 6.0], atol=1e-12)


def test_eigh_matches_lapack(rng):
    a = rng.normal(size=(200, 3, 3))
    a = a + np.swapaxes(a, -1, -2)
    values, vectors = eigh_sym3(a)
    reference = np.linalg.eigvalsh(a)[:, ::-1]
    assert np.allclose(values, reference, atol=1e-10)
    # columns are eigenvectors
    assert np.allclose(a @ vectors, vectors * values[:, None, :], atol=1e-9)


def test_random_admissible_inside_domain(rng):
    values = q_eigenvalues(random_admissible(rng, 500, margin=0.05))
    assert np.all(values[:, 0] < 2.0 / 3.0 - 0.05)
    assert np.all(values[:, 2] > -1.0 / 3.0 + 0.05)


def test_commutator_identity(rng):
    h = rng.normal(size=(1000, 3, 3))
    h = 0.5 * (h + np.swapaxes(h, -1, -2))
    q = random_admissible(rng, 1000)
    g = rng.normal(size=(1000, 3, 3))
    g -= np.trace(g, axis1=-2, axis2=-1)[:, None, None] * np.eye(3) / 3.0
    for xi in (0.0, 0.7, -1.3):
        residual = commutator_identity_check(h, q, g, xi, relative=True)
        assert residual.max() <= 1e-11


def test_stretching_traceless_for_solenoidal_gradient(rng):
    g = rng.normal(size=(50, 3, 3))
    g -= np.trace(g, axis1=-2, axis2=-1)[:, None, None] * np.eye(3) / 3.0
    q = random_admissible(rng, 50)
    assert np.max(np.abs(stretching_trace(g, q, 0.9))) <= 1e-13


def test_stretching_is_corotation_without_alignment():
    # Pure rotation about x3 turns Q but keeps it traceless.
    g = np.zeros((3, 3))
    g[0, 1], g[1, 0] = 1.0, -1.0
    q = uniaxial(0.4, [1.0, 0.0, 0.0])
    s = stretching(g, q, 0.0)
    assert abs(q_inner(s, q)) <= 1e-14


def test_odot_is_gram_matrix(rng):
    gq = rng.normal(size=(30, 3, 5))
    m = odot(gq)
    assert np.allclose(m, np.swapaxes(m, -1, -2))
    assert np.min(np.linalg.eigvalsh(m)) >= -1e-12
    assert np.allclose(np.trace(m, axis1=-2, axis2=-1), q_norm2(gq).sum(axis=-1))


def test_material_derivative_at_rest(rng):
    q_t = rng.normal(size=(4, 5))
    result = material_derivative(q_t, np.zeros((4, 3)), rng.normal(size=(4, 3, 5)), np.zeros((4, 5)))
    assert np.array_equal(result, q_t)


def test_project_matrix_symmetrizes():
    m = np.arange(9.0).reshape(3, 3)
    assert np.allclose(to_matrix(project_matrix(m)), to_matrix(project_matrix(m.T)))

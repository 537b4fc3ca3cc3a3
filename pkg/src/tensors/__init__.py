from src.tensors.eigen import eigh_sym3, q_eigenvalues
from src.tensors.kinematics import (
    commutator_identity_check,
    material_derivative,
    odot,
    strain,
    stretching,
    stretching_matrix,
    stretching_trace,
    vorticity,
)
from src.tensors.qtensor import (
    N_COMPONENTS,
    QTensor,
    project_matrix,
    q_inner,
    q_norm2,
    to_matrix,
    traceless_project,
    uniaxial,
)

__all__ = [
    "N_COMPONENTS",
    "QTensor",
    "commutator_identity_check",
    "eigh_sym3",
    "material_derivative",
    "odot",
    "project_matrix",
    "q_eigenvalues",
    "q_inner",
    "q_norm2",
    "strain",
    "stretching",
    "stretching_matrix",
    "stretching_trace",
    "to_matrix",
    "traceless_project",
    "uniaxial",
    "vorticity",
]

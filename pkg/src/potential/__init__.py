from src.potential.quadrature import SphereQuadrature, sphere_moment
from src.potential.singular import (
    LOG_4PI,
    PotentialEval,
    PotentialSettings,
    eval_f,
    eval_f_moreau,
    evaluate_bulk,
    solve_dual,
)
from src.potential.thermo import (
    LinearCoupling,
    OrderCoupling,
    SqrtCoupling,
    ThermoEval,
    ThermoFunctions,
    TransportCoefficient,
    TruncatedCoupling,
    check_hypotheses,
    default_thermo,
    eval_thermo,
    positivity_rate_bound,
    truncate_U,
)

__all__ = [
    "LOG_4PI",
    "LinearCoupling",
    "OrderCoupling",
    "PotentialEval",
    "PotentialSettings",
    "SphereQuadrature",
    "SqrtCoupling",
    "ThermoEval",
    "ThermoFunctions",
    "TransportCoefficient",
    "TruncatedCoupling",
    "check_hypotheses",
    "default_thermo",
    "eval_f",
    "eval_f_moreau",
    "eval_thermo",
    "evaluate_bulk",
    "positivity_rate_bound",
    "solve_dual",
    "sphere_moment",
    "truncate_U",
]

from dataclasses import dataclass

import numpy as np

from src.diagnostics.records import DiagnosticsRecord


@dataclass
class PositivityAudit:
    lambda_hat: float  # least-squares decay rate of theta_min
    violated: bool
    floor_activations: int
    worst_margin: float  # min over records of log theta_min - (log theta_min(0) - lambda_bound t)


def positivity_audit(
    records: list[DiagnosticsRecord],
    lambda_bound: float,
    tolerance: float = 1e-6,
) -> PositivityAudit:
    """Check theta_min(t) against the exponential floor theta_min(0) exp(-lambda_bound t).

    violated is set when theta_min <= 0 at some record or log theta_min drops
    more than tolerance below the floor.
    """
    if not records:
        raise ValueError("positivity audit needs at least one record")

    t = np.array([r.t for r in records])
    theta_min = np.array([r.theta_min for r in records])
    floors = max(r.floor_activations for r in records)

    if np.any(~(theta_min > 0)):
        return PositivityAudit(lambda_hat=float("inf"), violated=True, floor_activations=floors, worst_margin=float("-inf"))

    decay = -np.log(theta_min)
    lambda_hat = 0.0
    if len(records) > 1 and np.ptp(t) > 0:
        lambda_hat = float(np.polyfit(t - t[0], decay, 1)[0])

    margin = np.log(theta_min) - (np.log(theta_min[0]) - lambda_bound * (t - t[0]))
    worst = float(np.min(margin))
    return PositivityAudit(
        lambda_hat=lambda_hat,
        violated=worst < -tolerance,
        floor_activations=floors,
        worst_margin=worst,
    )

"""Text summary and plot-ready rows for a finished run."""
from dataclasses import dataclass
from typing import Optional

from src.diagnostics.entropy import entropy_balance_residual
from src.diagnostics.positivity import positivity_audit
from src.diagnostics.records import DiagnosticsRecord

PLOT_COLUMNS = ["t", "total_energy", "energy_drift", "entropy", "entropy_production", "theta_min", "q_eig_min", "q_eig_max"]


@dataclass
class RunSummary:
    text: str
    rows: list[dict[str, float]]
    entropy_residual: Optional[float]
    positivity_violated: Optional[bool]


def summarize(
    records: list[DiagnosticsRecord],
    lambda_bound: Optional[float] = None,
    volume: float = 1.0,
    tolerance: float = 1e-6,
) -> RunSummary:
    if not records:
        return RunSummary(text="No diagnostics records.", rows=[], entropy_residual=None, positivity_violated=None)

    first, last = records[0], records[-1]
    lines = [
        f"Records: {len(records)} (steps {first.step}..{last.step}, t {first.t:.6g}..{last.t:.6g})",
        f"Total energy: {first.total_energy:.12e} -> {last.total_energy:.12e}",
        f"Max energy drift: {max(r.energy_drift for r in records):.3e}",
        f"theta_min: {min(r.theta_min for r in records):.6e}  theta_max: {max(r.theta_max for r in records):.6e}",
        f"Q eigenvalues: [{min(r.q_eig_min for r in records):.6f}, {max(r.q_eig_max for r in records):.6f}]",
        f"Min entropy production: {min(r.entropy_production for r in records):.3e}",
        f"Max div u: {max(r.div_u for r in records):.3e}  max |tr Q|: {max(r.trace_Q for r in records):.3e}",
        f"Floor activations: {last.floor_activations}",
    ]

    entropy_residual = None
    if len(records) >= 2:
        entropy_residual = entropy_balance_residual(records, volume)
        lines.append(f"Entropy balance residual: {entropy_residual:.3e}")

    violated = None
    if lambda_bound is not None:
        audit = positivity_audit(records, lambda_bound, tolerance)
        violated = audit.violated
        status = "VIOLATED" if audit.violated else "ok"
        lines.append(
            f"Positivity: lambda_hat={audit.lambda_hat:.4e} lambda_bound={lambda_bound:.4e} [{status}]"
        )

    rows = [{name: getattr(r, name) for name in PLOT_COLUMNS} for r in records]
    return RunSummary(text="\n".join(lines), rows=rows, entropy_residual=entropy_residual, positivity_violated=violated)

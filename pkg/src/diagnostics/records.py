"""
Per-step diagnostics rows and their CSV form.

Floats are written with repr so identical runs give byte-identical files and
reading a file back reproduces every value exactly.
"""
import csv
import logging
from pathlib import Path
from typing import Iterable, Union

from pydantic import BaseModel, ConfigDict

from src.errors import NematicError
from src.observability import ErrorCategory

logger = logging.getLogger(__name__)


class DiagnosticsRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    t: float
    kinetic: float
    elastic: float
    bulk: float
    thermal_coupling: float
    heat: float
    total_energy: float
    entropy: float
    entropy_production: float
    theta_min: float
    theta_max: float
    q_eig_min: float
    q_eig_max: float
    div_u: float
    trace_Q: float
    energy_drift: float = 0.0
    step: int = 0
    pressure_l2: float = 0.0
    momentum_residual: float = 0.0
    floor_activations: int = 0
    newton_iters_max: int = 0
    production_min: float = 0.0  # pointwise minimum of the production density

    @property
    def energy_parts(self) -> float:
        return self.kinetic + self.elastic + self.bulk + self.thermal_coupling + self.heat


COLUMNS = list(DiagnosticsRecord.model_fields)


class RecordsFileError(NematicError):
    category = ErrorCategory.IO


def _format(value) -> str:
    return str(value) if isinstance(value, int) else repr(float(value))


def write_records_csv(path: Union[str, Path], records: Iterable[DiagnosticsRecord]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(COLUMNS)
        for record in records:
            writer.writerow([_format(getattr(record, name)) for name in COLUMNS])
            count += 1
    logger.debug(f"Wrote {count} diagnostics rows to {path}")


def read_records_csv(path: Union[str, Path]) -> list[DiagnosticsRecord]:
    path = Path(path)
    try:
        with open(path, newline="") as f:
            reader = csv.DictReader(f)
            missing = [c for c in COLUMNS if c not in (reader.fieldnames or [])]
            if missing:
                raise RecordsFileError(f"{path}: missing columns {', '.join(missing)}")
            return [DiagnosticsRecord.model_validate(row) for row in reader]
    except OSError as e:
        raise RecordsFileError(f"cannot read diagnostics file {path}: {e}") from e

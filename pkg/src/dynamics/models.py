import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator

R_MIN, R_MAX = 3.0, 10.0 / 3.0


class SchemeParams(BaseModel):
    """Time step and regularization knobs of the approximate scheme."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    dt: float = Field(default=1e-3, gt=0)
    xi: float = 0.0
    m: float = Field(default=math.inf, gt=0)  # inf selects the exact singular potential
    delta: float = Field(default=0.0, ge=0)
    epsilon: float = Field(default=0.0, ge=0)
    r: float = 3.2
    forcing_amplitude: float = 0.0
    frozen_temperature: bool = False

    @field_validator("m", mode="before")
    @classmethod
    def parse_exact(cls, v):
        if isinstance(v, str) and v.strip().lower() in ("exact", "inf", "infinity"):
            return math.inf
        return v

    @field_validator("r")
    @classmethod
    def r_in_range(cls, v: float, info: ValidationInfo) -> float:
        if info.data.get("delta", 0.0) > 0 and not R_MIN < v < R_MAX:
            raise ValueError(f"r must lie in (3, 10/3) when delta > 0, got {v}")
        return v

    @property
    def exact(self) -> bool:
        return math.isinf(self.m)


class StepTolerances(BaseModel):
    """Per-step guards."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    div_u: float = Field(default=1e-10, gt=0)
    trace_q: float = Field(default=1e-12, gt=0)
    cfl_warn: float = Field(default=0.5, gt=0)
    cfl_abort: float = Field(default=5.0, gt=0)
    theta_floor: float = Field(default=1e-10, ge=0)


STATE_COMPONENTS = 10


@dataclass
class State:
    """u (*grid, 3), Q (*grid, 5), theta and p (*grid,), at time t after `step` steps."""
    u: NDArray[np.float64]
    Q: NDArray[np.float64]
    theta: NDArray[np.float64]
    p: NDArray[np.float64]
    t: float = 0.0
    step: int = 0

    @classmethod
    def zeros(cls, shape: tuple[int, ...], theta0: float = 1.0) -> "State":
        return cls(
            u=np.zeros(shape + (3,)),
            Q=np.zeros(shape + (5,)),
            theta=np.full(shape, float(theta0)),
            p=np.zeros(shape),
        )

    def copy(self) -> "State":
        return replace(
            self,
            u=self.u.copy(),
            Q=self.Q.copy(),
            theta=self.theta.copy(),
            p=self.p.copy(),
        )

    def pack(self) -> NDArray[np.float64]:
        """Snapshot payload (*grid, 10): u, Q, theta, p."""
        return np.concatenate([self.u, self.Q, self.theta[..., None], self.p[..., None]], axis=-1)

    @classmethod
    def unpack(cls, data: NDArray[np.float64], t: float, step: int) -> "State":
        if data.shape[-1] != STATE_COMPONENTS:
            raise ValueError(f"state payload needs {STATE_COMPONENTS} components, got {data.shape[-1]}")
        return cls(
            u=np.array(data[..., 0:3]),
            Q=np.array(data[..., 3:8]),
            theta=np.array(data[..., 8]),
            p=np.array(data[..., 9]),
            t=float(t),
            step=int(step),
        )


@dataclass
class StepReport:
    step: int
    t: float
    stretching_trace: float  # max |tr S| before re-projection
    div_residual: float
    cfl: float
    floor_activations: int = 0
    newton_iters: int = 0


@dataclass
class RunOutcome:
    """What a run leaves behind; attached to a SchemeFailure as `partial`."""
    state: State
    records: list = field(default_factory=list)
    reports: list[StepReport] = field(default_factory=list)
    failure: Optional[Exception] = None

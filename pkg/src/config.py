"""
Run configuration: flat INI sections validated by pydantic models.

Every numeric knob lives in the config file. The environment only supplies
NEMATIC_THREADS (FFT workers), read through python-dotenv in src.fields.grid.
"""
import configparser
import logging
import math
import re
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, ValidationInfo, field_validator, model_validator

from src.dynamics.models import SchemeParams, StepTolerances
from src.dynamics.presets import PRESETS
from src.errors import ConfigError
from src.fields.grid import Grid
from src.potential.quadrature import SphereQuadrature
from src.potential.singular import PotentialSettings
from src.potential.thermo import (
    LinearCoupling,
    OrderCoupling,
    SqrtCoupling,
    ThermoFunctions,
    TransportCoefficient,
)

logger = logging.getLogger(__name__)


class GridSection(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    dim: int = 2
    n: int = 32

    @field_validator("dim")
    @classmethod
    def dim_2_or_3(cls, v: int) -> int:
        if v not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        return v

    @field_validator("n")
    @classmethod
    def n_power_of_two(cls, v: int) -> int:
        if v < 8 or v & (v - 1):
            raise ValueError("n must be a power of two >= 8")
        return v


class SchemeSection(SchemeParams):
    steps: int = Field(default=100, ge=0)

    def params(self) -> SchemeParams:
        return SchemeParams(**self.model_dump(exclude={"steps"}))


class ThermoSection(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    u_model: Literal["sqrt", "linear"] = "sqrt"
    u_a: float = 2.0
    u_b: float = Field(default=1.0, gt=0)
    u_alpha: float = Field(default=1.0, gt=0)
    u_theta_star: float = Field(default=1.0, gt=0)
    g_cutoff: Optional[float] = Field(default=None, gt=0)
    mu: float = Field(default=1.0, gt=0)
    mu_variation: float = Field(default=0.0, ge=0, lt=1)
    mu_theta_ref: float = Field(default=1.0, gt=0)
    kappa: float = Field(default=1.0, gt=0)
    kappa_variation: float = Field(default=0.0, ge=0, lt=1)
    kappa_theta_ref: float = Field(default=1.0, gt=0)
    gamma: float = Field(default=1.0, gt=0)
    gamma_variation: float = Field(default=0.0, ge=0, lt=1)
    gamma_theta_ref: float = Field(default=1.0, gt=0)
    quadrature_theta: int = Field(default=32, ge=4)
    quadrature_phi: int = Field(default=64, ge=8)
    newton_tol: float = Field(default=1e-12, gt=0)
    newton_max_iter: int = Field(default=50, ge=1)
    domain_margin: float = Field(default=1e-8, ge=1e-8, lt=1.0 / 3.0)

    @field_validator("g_cutoff", mode="before")
    @classmethod
    def parse_none(cls, v):
        if isinstance(v, str) and v.strip().lower() in ("none", ""):
            return None
        return v

    @field_validator("u_b")
    @classmethod
    def sqrt_needs_a_above_b(cls, v: float, info: ValidationInfo) -> float:
        if info.data.get("u_model") == "sqrt" and not info.data.get("u_a", math.inf) > v:
            raise ValueError("the sqrt coupling needs u_a > u_b > 0")
        return v


class InitSection(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    presets: list[str] = Field(default_factory=lambda: ["equilibrium"])
    amplitude: float = 0.1
    theta0: float = Field(default=1.0, gt=0)
    seed: int = Field(default=0, ge=0)

    @field_validator("presets", mode="before")
    @classmethod
    def split_names(cls, v):
        if isinstance(v, str):
            return [name.strip() for name in v.split(",") if name.strip()]
        return v

    @field_validator("presets")
    @classmethod
    def known_presets(cls, v: list[str]) -> list[str]:
        unknown = [name for name in v if name not in PRESETS]
        if unknown:
            raise ValueError(f"unknown preset(s) {', '.join(unknown)}; choose from {', '.join(PRESETS)}")
        if not v:
            raise ValueError("at least one preset is required")
        return v


class OutputSection(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    directory: str = "output"
    diagnostics: str = "diagnostics.csv"
    diag_every: int = Field(default=1, ge=1)
    snapshot_every: int = Field(default=0, ge=0)


class ToleranceSection(StepTolerances):
    positivity: float = Field(default=1e-6, ge=0)
    check_seed: int = Field(default=1234, ge=0)

    @model_validator(mode="after")
    def warn_below_abort(self):
        if self.cfl_warn > self.cfl_abort:
            raise ValueError("cfl_warn must not exceed cfl_abort")
        return self

    def step_tolerances(self) -> StepTolerances:
        return StepTolerances(**self.model_dump(include=set(StepTolerances.model_fields)))


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    grid: GridSection = Field(default_factory=GridSection)
    scheme: SchemeSection = Field(default_factory=SchemeSection)
    thermo: ThermoSection = Field(default_factory=ThermoSection)
    init: InitSection = Field(default_factory=InitSection)
    output: OutputSection = Field(default_factory=OutputSection)
    tolerance: ToleranceSection = Field(default_factory=ToleranceSection)


SECTIONS = list(RunConfig.model_fields)


def _key_line(text: str, section: str, key: Optional[str]) -> Optional[int]:
    """1-based line of `key` inside [section], or of the section header."""
    current = None
    header_line = None
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        match = re.match(r"^\[([^\]]+)\]", stripped)
        if match:
            current = match.group(1).strip().lower()
            if current == section and header_line is None:
                header_line = number
            continue
        if current == section and key and re.match(rf"^{re.escape(key)}\s*[=:]", stripped, re.IGNORECASE):
            return number
    return header_line


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    """Parse and validate config text.

    Raises:
        ConfigError: Syntax error (with line), unknown section, or an invalid value
            (with its section.key path)
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError(f"{source}: key outside any section", line=e.lineno) from e
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as e:
        raise ConfigError(f"{source}: {e.message}", line=e.lineno) from e
    except configparser.ParsingError as e:
        line = e.errors[0][0] if e.errors else None
        raise ConfigError(f"{source}: cannot parse line", line=line) from e

    data = {}
    for section in parser.sections():
        name = section.strip().lower()
        if name not in SECTIONS:
            raise ConfigError(
                f"{source}: unknown section; expected one of {', '.join(SECTIONS)}",
                key_path=name,
                line=_key_line(text, name, None),
            )
        data[name] = dict(parser[section])

    try:
        config = RunConfig.model_validate(data)
    except ValidationError as e:
        error = e.errors()[0]
        loc = [str(part) for part in error["loc"]]
        key_path = ".".join(loc) if loc else None
        line = _key_line(text, loc[0], loc[1] if len(loc) > 1 else None) if loc else None
        raise ConfigError(f"{source}: {error['msg']}", key_path=key_path, line=line) from e

    logger.debug(f"Loaded config from {source}: grid={config.grid.n}^{config.grid.dim}, dt={config.scheme.dt}")
    return config


def load_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e.strerror}") from e
    return parse_config(text, source=str(path))


def _format_value(key: str, value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "none"
    if isinstance(value, list):
        return ", ".join(value)
    if isinstance(value, float):
        if key == "m" and math.isinf(value):
            return "exact"
        return repr(value)
    return str(value)


def serialize_config(config: RunConfig) -> str:
    """Config text with every key written out; parse_config inverts it exactly."""
    blocks = []
    for section in SECTIONS:
        model = getattr(config, section)
        lines = [f"[{section}]"]
        for key in type(model).model_fields:
            lines.append(f"{key} = {_format_value(key, getattr(model, key))}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


# -- builders -------------------------------------------------------------------


def build_grid(config: RunConfig) -> Grid:
    return Grid(config.grid.n, config.grid.dim)


def build_thermo(section: ThermoSection) -> ThermoFunctions:
    if section.u_model == "sqrt":
        coupling = SqrtCoupling(a=section.u_a, b=section.u_b)
    else:
        coupling = LinearCoupling(alpha=section.u_alpha, theta_star=section.u_theta_star)
    return ThermoFunctions(
        coupling=coupling,
        order=OrderCoupling(cutoff=section.g_cutoff),
        mu=TransportCoefficient(section.mu, section.mu_variation, section.mu_theta_ref),
        kappa=TransportCoefficient(section.kappa, section.kappa_variation, section.kappa_theta_ref),
        gamma=TransportCoefficient(section.gamma, section.gamma_variation, section.gamma_theta_ref),
    )


def build_potential_settings(section: ThermoSection) -> PotentialSettings:
    return PotentialSettings(
        tol=section.newton_tol,
        max_iter=section.newton_max_iter,
        margin=section.domain_margin,
    )


def build_quadrature(section: ThermoSection) -> SphereQuadrature:
    return SphereQuadrature.product_rule(section.quadrature_theta, section.quadrature_phi)

"""Scenario configuration models and the TOML config file dialect.

Every model rejects unknown keys and is immutable; numerical kernels receive
these models directly, value types produced during a run are plain dataclasses.
"""

from __future__ import annotations

import logging
import math
import pathlib
import re
import tomllib
import typing
from importlib import resources

import tomli_w
from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field
from pydantic import ValidationError
from pydantic import model_validator

from .const import DisturbanceKind
from .const import RateConvention
from .const import ReferenceKind
from .exceptions import ConfigError

log = logging.getLogger(__name__)

_TOML_LINE = re.compile(r"at line (\d+)")

DisturbanceLiteral = typing.Literal[
    "none", "constant", "sinusoid", "bounded-uniform-random"
]
ReferenceLiteral = typing.Literal["constant", "sinusoid", "smoothstep"]
RateLiteral = typing.Literal["multiply", "divide"]


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class PendulumParams(_Model):
    """Physical constants of the cart and pole."""

    g: float = Field(9.8, gt=0)
    m_c: float = Field(1.0, gt=0)
    m: float = Field(0.1, gt=0)
    l: float = Field(0.5, gt=0)  # noqa: E741

    @property
    def total_mass(self: PendulumParams) -> float:
        return self.m_c + self.m


class InitialState(_Model):
    x1: float = 0.1
    x2: float = 0.0

    @model_validator(mode="after")
    def _upright(self: InitialState) -> InitialState:
        if not abs(self.x1) < math.pi / 2:
            raise ValueError("|x1| < pi/2 required for the initial angle")
        return self


class DisturbanceSpec(_Model):
    kind: DisturbanceLiteral = DisturbanceKind.NONE
    amplitude: float = Field(0.0, ge=0)
    frequency: float = Field(0.0, ge=0)
    seed: int = Field(0, ge=0)
    hold: float = Field(0.01, gt=0)


class ReferenceSignal(_Model):
    """Desired angle trajectory.  ``start=None`` on a smoothstep means the
    blend starts at the scenario's initial angle."""

    kind: ReferenceLiteral = ReferenceKind.CONSTANT
    setpoint: float = 0.0
    amplitude: float = 0.0
    frequency: float = Field(0.0, ge=0)
    ramp_time: float = Field(2.0, gt=0)
    start: float | None = None


class Gains(_Model):
    c1: float = 2.0
    c2: float = 2.0

    @model_validator(mode="after")
    def _positive(self: Gains) -> Gains:
        for name in ("c1", "c2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} > 0 required")
        return self


class Weights(_Model):
    T: float = Field(100.0, gt=0)
    R: float = Field(0.01, gt=0)

    @model_validator(mode="after")
    def _tracking_dominates(self: Weights) -> Weights:
        if self.T <= self.R:
            log.warning(
                "tracking weight T=%g is not larger than effort weight R=%g",
                self.T,
                self.R,
            )
        return self


class Bounds(_Model):
    u_min: float = -30.0
    u_max: float = 30.0

    @model_validator(mode="after")
    def _ordered(self: Bounds) -> Bounds:
        if not self.u_min < self.u_max:
            raise ValueError("u_min < u_max required")
        return self

    @classmethod
    def symmetric(cls: type[Bounds], limit: float) -> Bounds:
        return cls(u_min=-abs(limit), u_max=abs(limit))


class PrnnConfig(_Model):
    vartheta: float = Field(50.0, gt=0)
    inner_steps: int = Field(20, ge=1)
    tol: float = Field(1e-9, gt=0)
    phi0: float = 0.0
    rate_convention: RateLiteral = RateConvention.MULTIPLY


class RlsOptions(_Model):
    """Estimator settings.

    The controller switches from the prior model to the RLS estimate only
    after `warmup_steps`, once the largest covariance eigenvalue has fallen
    below `adoption_ratio` times `initial_covariance`, and only while each
    estimated physical parameter stays within a factor `trust_ratio` of the
    model in use."""

    initial_perturbation: float = Field(0.3, gt=-1, lt=1)
    initial_covariance: float = Field(100.0, gt=0)
    warmup_steps: int = Field(50, ge=0)
    excitation_threshold: float = Field(1e-8, ge=0)
    adoption_ratio: float = Field(0.01, gt=0, le=1)
    trust_ratio: float = Field(2.0, gt=1)


class Timing(_Model):
    plant_dt: float = Field(0.001, gt=0)
    control_period: float = Field(0.01, gt=0)
    duration: float = Field(5.0, gt=0)

    @model_validator(mode="after")
    def _commensurate(self: Timing) -> Timing:
        ratio = self.control_period / self.plant_dt
        if ratio < 1 - 1e-9 or abs(ratio - round(ratio)) > 1e-6:
            raise ValueError("control_period must be an integer multiple of plant_dt")
        return self

    @property
    def substeps(self: Timing) -> int:
        return round(self.control_period / self.plant_dt)

    @property
    def control_steps(self: Timing) -> int:
        return max(1, round(self.duration / self.control_period))


class Scenario(_Model):
    name: str = "default"
    params: PendulumParams = PendulumParams()
    initial: InitialState = InitialState()
    reference: ReferenceSignal = ReferenceSignal()
    disturbance: DisturbanceSpec = DisturbanceSpec()
    gains: Gains = Gains()
    weights: Weights = Weights()
    bounds: Bounds = Bounds()
    prnn: PrnnConfig = PrnnConfig()
    timing: Timing = Timing()
    adaptive: bool = False
    rls: RlsOptions = RlsOptions()
    seed: int = Field(0, ge=0)
    settle_tolerance: float = Field(0.01, gt=0)


def scenario_from_mapping(data: typing.Mapping[str, typing.Any], source: str) -> Scenario:
    """Validate a raw mapping into a `Scenario`, translating pydantic
    failures into a `ConfigError` naming the first offending key."""
    try:
        return Scenario.model_validate(data)
    except ValidationError as err:
        first = err.errors()[0]
        key = ".".join(str(part) for part in first["loc"]) or None
        raise ConfigError(source, first["msg"], key=key) from None


def load_scenario(path: pathlib.Path | str) -> Scenario:
    """Parse a TOML scenario file.

    :param path: Location of the file.
    """
    path = pathlib.Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(str(path), f"unreadable ({err.strerror})") from None
    return loads_scenario(text, source=str(path))


def loads_scenario(text: str, source: str = "<string>") -> Scenario:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as err:
        found = _TOML_LINE.search(str(err))
        line = int(found.group(1)) if found else None
        raise ConfigError(source, str(err), line=line) from None
    return scenario_from_mapping(data, source)


def dumps_scenario(scenario: Scenario) -> str:
    """Serialize a scenario to TOML.  ``None`` values are left out since TOML
    has no null; they are restored from the model defaults on parse."""
    return tomli_w.dumps(scenario.model_dump(exclude_none=True))


def dump_scenario(scenario: Scenario, path: pathlib.Path | str) -> pathlib.Path:
    path = pathlib.Path(path)
    path.write_text(dumps_scenario(scenario), encoding="utf-8")
    return path


def default_scenario() -> Scenario:
    """The scenario bundled with the package."""
    text = resources.files("prnn_abc").joinpath("data/default.toml").read_text("utf-8")
    return loads_scenario(text, source="prnn_abc/data/default.toml")

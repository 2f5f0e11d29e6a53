from __future__ import annotations
import hashlib
import json
import math
import re
from typing import Literal

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_validator,
    model_validator,
    ValidationError,
)

from cardy_lab.lattice.shapes import DomainKind, DomainSpec
from cardy_lab.models.exceptions import ParseError, ConfigValidationError, InvalidSpec
from cardy_lab.models.structures import Color


LoggingLevel = Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
ExperimentKind = Literal["crossing", "observable", "arm", "onearm", "half_annulus"]
DomainKindName = Literal[
    "equilateral_triangle", "rectangle", "half_disk", "half_annulus", "sector", "disk", "rhombus"
]
MIN_TRIALS = 100
_U64_MAX = 2**64 - 1


class InvalidConfiguration(Exception):
    pass


class _StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class LoggingConfig(_StrictModel):
    console: HandlerConfig
    file: HandlerConfig

    class HandlerConfig(_StrictModel):
        level: LoggingLevel
        use: bool
        path: str = ""

        @field_validator("level", mode="before")
        @classmethod
        def validate_level(cls, level: str) -> str:
            return level.upper()


def _default_logging() -> LoggingConfig:
    return LoggingConfig(
        console=LoggingConfig.HandlerConfig(level="INFO", use=True),
        file=LoggingConfig.HandlerConfig(level="DEBUG", use=False),
    )


class DomainConfig(_StrictModel):
    kind: DomainKindName
    size: float = Field(default=1.0, gt=0)
    aspect: float = Field(default=1.0, gt=0)
    inner_radius: float = Field(default=0.5, gt=0)
    angle: float = Field(default=math.pi, gt=0, lt=2 * math.pi)
    block: tuple[int, int] = (3, 3)
    marks: Literal[3, 4] = 3
    midpoints: bool = False
    marked_points: list[float] = []

    @field_validator("marked_points")
    @classmethod
    def marked_points_validator(cls, points: list[float]) -> list[float]:
        if points and len(points) not in (3, 4):
            raise ValueError("marked points: 3 or 4 boundary parameters")
        if any(not 0 <= t < 1 for t in points):
            raise ValueError("marked points lie in [0, 1)")
        if any(b <= a for a, b in zip(points, points[1:])):
            raise ValueError("marked points are distinct and counter-clockwise ordered")
        return points

    @model_validator(mode="after")
    def radii_validator(self) -> DomainConfig:
        if self.kind == "half_annulus" and not self.inner_radius < self.size:
            raise ValueError("half-annulus radii satisfy inner_radius < size")
        return self

    def to_spec(self) -> DomainSpec:
        kind = DomainKind(self.kind)
        if kind == DomainKind.RECTANGLE and self.midpoints and not self.marked_points:
            return DomainSpec.rectangle(self.aspect, self.size, midpoints=True)
        spec = DomainSpec(
            kind,
            size=self.size,
            aspect=self.aspect,
            inner_radius=self.inner_radius,
            angle=self.angle,
            block=tuple(self.block),
            marked_points=tuple(self.marked_points),
            marks=4 if kind in (DomainKind.RECTANGLE, DomainKind.RHOMBUS) else self.marks,
        )
        try:
            spec.validate()
        except InvalidSpec as e:
            raise ValueError(str(e)) from None
        return spec


class ArmConfig(_StrictModel):
    k: int = Field(ge=1, le=6)
    angle: float = Field(default=math.pi, gt=0, le=2 * math.pi)
    inner_radius: float = Field(default=2.0, gt=0)
    start_color: Literal["open", "closed"] | None = None

    def color(self) -> Color | None:
        if self.start_color is None:
            return None
        return Color.OPEN if self.start_color == "open" else Color.CLOSED


class MultiscaleConfig(_StrictModel):
    enabled: bool = False
    c: float = Field(default=0.1, gt=0, lt=1 / 3)
    r0: float | None = Field(default=None, gt=1)


class FitConfig(_StrictModel):
    exclude_transient: bool = True


class ExperimentConfig(_StrictModel):
    experiment: ExperimentKind
    trials: int
    seed: int = Field(default=0, ge=0, le=_U64_MAX)
    workers: int = Field(default=1, ge=1)
    output: str = "./results"
    domain: DomainConfig | None = None
    deltas: list[float] = []
    radii: list[float] = []
    ratio: float = Field(default=8.0, gt=1)
    arm: ArmConfig | None = None
    multiscale: MultiscaleConfig = MultiscaleConfig()
    fit: FitConfig = FitConfig()
    logging: LoggingConfig = Field(default_factory=_default_logging)

    @field_validator("trials")
    @classmethod
    def trials_validator(cls, trials: int) -> int:
        if trials < MIN_TRIALS:
            raise ValueError(f"trials ≥ {MIN_TRIALS}")
        return trials

    @field_validator("deltas", "radii")
    @classmethod
    def scales_validator(cls, scales: list[float]) -> list[float]:
        if any(s <= 0 for s in scales):
            raise ValueError("scales are positive")
        increasing = all(b > a for a, b in zip(scales, scales[1:]))
        decreasing = all(b < a for a, b in zip(scales, scales[1:]))
        if not (increasing or decreasing):
            raise ValueError("scale lists are strictly monotone")
        return scales

    @model_validator(mode="after")
    def experiment_validator(self) -> ExperimentConfig:
        kind = self.experiment
        if kind in ("crossing", "observable"):
            if self.domain is None:
                raise ValueError(f"{kind} experiment needs a domain")
            marks = len(self.domain.to_spec().boundary_parameters())
            if kind == "crossing" and marks != 4:
                raise ValueError("crossing experiment needs a 4-pointed domain")
            if kind == "observable" and marks != 3:
                raise ValueError("observable experiment needs a 3-pointed domain")
            if len(self.deltas) < (4 if kind == "crossing" else 3):
                raise ValueError(f"{kind} experiment needs at least {4 if kind == 'crossing' else 3} deltas")
        else:
            if len(self.radii) < (1 if kind == "half_annulus" else 3):
                raise ValueError(f"{kind} experiment needs a list of radii")
            if kind == "arm" and self.arm is None:
                raise ValueError("arm experiment needs an arm section")
            if kind == "arm" and min(self.radii) <= self.arm.inner_radius:
                raise ValueError("outer radii exceed the arm inner radius")
        return self


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate the JSON text of an experiment configuration."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"Malformed configuration at line {e.lineno}, column {e.colno}: {e.msg}") from None
    if not isinstance(data, dict):
        raise ParseError("Configuration must be a JSON object at line 1.")
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        unknown = [err for err in e.errors() if err["type"] == "extra_forbidden"]
        if unknown:
            keys = ", ".join(_located_key(text, err["loc"]) for err in unknown)
            raise ParseError(f"Unknown configuration key: {keys}") from None
        messages = "; ".join(f"{_location(err['loc'])}: {err['msg']}" for err in e.errors())
        raise ConfigValidationError(messages) from None


def _location(loc: tuple) -> str:
    return ".".join(str(part) for part in loc) or "<root>"


def _key_line(text: str, loc: tuple) -> int | None:
    """Line of the key at `loc`, found by following the path through the JSON text."""
    position = 0
    for part in loc:
        if not isinstance(part, str):
            continue
        match = re.compile(rf'"{re.escape(part)}"\s*:').search(text, position)
        if match is None:
            return None
        position = match.start()
    return text.count("\n", 0, position) + 1


def _located_key(text: str, loc: tuple) -> str:
    line = _key_line(text, loc)
    return _location(loc) if line is None else f"{_location(loc)} at line {line}"


def echo(config: ExperimentConfig) -> str:
    """Canonical text of a configuration; parsing it back yields the same echo."""
    return config.model_dump_json(indent=4)


def config_hash(config: ExperimentConfig) -> str:
    """Digest of the fields that determine the results (workers, output and logging excluded)."""
    data = config.model_dump(mode="json", exclude={"workers", "output", "logging"})
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def load_config(config_path: str) -> ExperimentConfig:
    try:
        with open(config_path) as config_file:
            data = config_file.read()
    except OSError as e:
        raise InvalidConfiguration(f"Config could not be loaded. {e}") from None

    try:
        config = parse_config(data)
    except (ParseError, ConfigValidationError) as e:
        raise InvalidConfiguration(e) from None

    return config


def with_overrides(config: ExperimentConfig, **updates) -> ExperimentConfig:
    """The config with the given fields replaced, validated again; None values are ignored."""
    data = config.model_dump()
    data.update({key: value for key, value in updates.items() if value is not None})
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        messages = "; ".join(f"{_location(err['loc'])}: {err['msg']}" for err in e.errors())
        raise ConfigValidationError(messages) from None

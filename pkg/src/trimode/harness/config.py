"""Run configuration: a JSON document parsed into validated models.

Every physics default is filled in on parsing and echoed back through
:meth:`RunConfig.echo`, so an output directory always records exactly what
was run.
"""

from __future__ import annotations

import json
import math
from typing import Literal

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from ..dynamics import SqueezeSpec
from ..errors import ParameterError
from ..measures import MeasuredMode
from ..spectrum import PARAM_NAMES, OscillatorParams

QUANTITY_NAMES = ("e_n_avg", "discord_avg", "fidelity_avg", "chi_f_avg")


class ConfigError(ParameterError):
    """The configuration document is malformed or violates a constraint."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ParamsModel(_Strict):
    omega_a: float
    omega_b: float
    lambda_a: float = 0.0
    lambda_b: float = 0.0
    g_a: float = 0.0
    g_b: float = 0.0

    def to_params(self) -> OscillatorParams:
        return OscillatorParams(**self.model_dump())


class SqueezeModel(_Strict):
    r: tuple[float, float, float] = (0.0, 0.0, 0.0)
    theta: tuple[float, float, float] = (0.0, 0.0, 0.0)

    @field_validator("r")
    @classmethod
    def _nonnegative(cls, v: tuple[float, float, float]) -> tuple[float, float, float]:
        if any(not math.isfinite(x) or x < 0 for x in v):
            raise ValueError("squeezing strengths must be finite and >= 0")
        return v

    def to_spec(self) -> SqueezeSpec:
        return SqueezeSpec(self.r, self.theta)


class TimeModel(_Strict):
    # null window: average_window_periods cycles of the slowest mode
    t_max: float | None = Field(default=None, gt=0)
    n_samples: int | Literal["auto"] = "auto"

    @field_validator("n_samples")
    @classmethod
    def _at_least_two(cls, v: int | str) -> int | str:
        if isinstance(v, int) and v < 2:
            raise ValueError("n_samples must be >= 2")
        return v


class AxisModel(_Strict):
    param: Literal["omega_a", "omega_b", "lambda_a", "lambda_b", "g_a", "g_b"]
    min: float
    max: float
    n_points: int = Field(ge=2)
    scale: Literal["linear", "log"] = "linear"

    @model_validator(mode="after")
    def _range(self) -> AxisModel:
        if not self.max > self.min:
            raise ValueError("axis max must exceed min")
        if self.scale == "log" and self.min <= 0:
            raise ValueError("log axis needs min > 0")
        return self

    def values(self) -> np.ndarray:
        return _axis_values(self.min, self.max, self.n_points, self.scale)


class LinkModel(_Strict):
    """``param = factor * source``, applied after the axes are assigned."""

    param: Literal["omega_a", "omega_b", "lambda_a", "lambda_b", "g_a", "g_b"]
    source: Literal["omega_a", "omega_b", "lambda_a", "lambda_b", "g_a", "g_b"]
    factor: float


class SweepModel(_Strict):
    axis1: AxisModel
    axis2: AxisModel
    quantities: tuple[Literal["e_n_avg", "discord_avg", "fidelity_avg", "chi_f_avg"], ...] = ("e_n_avg",)
    links: tuple[LinkModel, ...] = ()

    @model_validator(mode="after")
    def _distinct(self) -> SweepModel:
        if self.axis1.param == self.axis2.param:
            raise ValueError("sweep axes must name distinct parameters")
        if not self.quantities:
            raise ValueError("sweep needs at least one quantity")
        if len(set(self.quantities)) != len(self.quantities):
            raise ValueError("duplicate sweep quantity")
        axes = {self.axis1.param, self.axis2.param}
        for link in self.links:
            if link.param in axes:
                raise ValueError(f"link target {link.param} is already a sweep axis")
        return self


class ScanModel(_Strict):
    min: float = Field(gt=0)
    max: float = Field(gt=0)
    n_points: int = Field(ge=1)
    scale: Literal["linear", "log"] = "linear"
    # lambda_b = lambda_b_ratio * omega_b along the scan; null keeps params.lambda_b
    lambda_b_ratio: float | None = Field(default=None, ge=0, le=1)

    @model_validator(mode="after")
    def _range(self) -> ScanModel:
        if self.n_points > 1 and not self.max > self.min:
            raise ValueError("scan max must exceed min")
        return self

    def values(self) -> np.ndarray:
        if self.n_points == 1:
            return np.array([float(self.min)])
        return _axis_values(self.min, self.max, self.n_points, self.scale)


class DfsModel(_Strict):
    # delta_t = delta_t_factor * 2 pi / k3
    delta_t_factor: float = Field(default=1e-3, gt=0)
    scan: ScanModel | None = None


class ConfigModel(_Strict):
    params: ParamsModel
    squeeze: SqueezeModel = SqueezeModel()
    time: TimeModel = TimeModel()
    dfs: DfsModel = DfsModel()
    average_window_periods: int = Field(default=50, ge=10)
    measured_mode: Literal["A", "C"] = "C"
    sweep: SweepModel | None = None


def _axis_values(lo: float, hi: float, n: int, scale: str) -> np.ndarray:
    if scale == "log":
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


class RunConfig:
    """A validated single-run configuration."""

    def __init__(self, model: ConfigModel) -> None:
        self.model = model
        self.params = model.params.to_params()
        self.squeeze = model.squeeze.to_spec()
        self.measured_mode = MeasuredMode(model.measured_mode)

    @property
    def time(self) -> TimeModel:
        return self.model.time

    @property
    def dfs(self) -> DfsModel:
        return self.model.dfs

    @property
    def average_window_periods(self) -> int:
        return self.model.average_window_periods

    def echo(self) -> dict:
        return self.model.model_dump(mode="json")


class SweepSpec(RunConfig):
    """A run configuration carrying a two-axis sweep."""

    def __init__(self, model: ConfigModel) -> None:
        if model.sweep is None:
            raise ConfigError("sweep section missing")
        super().__init__(model)
        self.sweep = model.sweep

    def point_params(self, v1: float, v2: float) -> dict[str, float]:
        values = self.model.params.model_dump()
        values[self.sweep.axis1.param] = float(v1)
        values[self.sweep.axis2.param] = float(v2)
        for link in self.sweep.links:
            values[link.param] = link.factor * values[link.source]
        return values


def _format_loc(loc: tuple) -> str:
    return ".".join(str(x) for x in loc) or "<root>"


def parse_config(text: str) -> RunConfig | SweepSpec:
    """Parse a JSON configuration document.

    Raises
    ------
    ConfigError
        On malformed JSON (with line and column), unknown keys or invalid
        values (with the dotted key path), or parameters that violate the
        model's bounds.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    try:
        model = ConfigModel.model_validate(raw)
    except ValidationError as exc:
        lines = [f"{_format_loc(err['loc'])}: {err['msg']}" for err in exc.errors()]
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(lines)) from exc
    if model.sweep is not None:
        return SweepSpec(model)
    if model.dfs.scan is None:
        margin = _stability_margin(model.params.model_dump())
        if margin < 0:
            raise ConfigError(
                "params: stability bound g_a^2 + g_b^2 <= (omega_a+lambda_a)(omega_b+lambda_b)/4 "
                f"violated (margin {margin:.6g})"
            )
    try:
        cfg = RunConfig(model)
    except ParameterError as exc:
        raise ConfigError(f"params: {exc}") from exc
    return cfg


def _stability_margin(v: dict[str, float]) -> float:
    return 0.25 * (v["omega_a"] + v["lambda_a"]) * (v["omega_b"] + v["lambda_b"]) - (
        v["g_a"] ** 2 + v["g_b"] ** 2
    )


def load_config(path: str) -> RunConfig | SweepSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from exc
    return parse_config(text)


__all__ = [
    "PARAM_NAMES",
    "QUANTITY_NAMES",
    "ConfigError",
    "ConfigModel",
    "RunConfig",
    "SweepSpec",
    "load_config",
    "parse_config",
]

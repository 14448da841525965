"""
Experiment Configuration
YAML experiment files, PWDEC_* environment overrides and request models
"""
import logging
import os
from typing import Any, Dict, List, Literal, Mapping, Optional, get_args

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .decoding_graph import CodeFamily
from .errors import ConfigError
from .inner_decoders import Growth

logger = logging.getLogger(__name__)

ENV_PREFIX = "PWDEC_"

Mode = Literal["global", "sliding", "parallel", "pipeline"]
LogLevel = Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
LOG_LEVELS = get_args(LogLevel)


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    family: CodeFamily = CodeFamily.ROTATED_PLANAR
    distances: List[int] = Field(default_factory=lambda: [3])
    p: float = 0.02
    rounds: Optional[int] = Field(default=None, ge=1)
    rounds_per_d: int = Field(default=8, ge=1)
    shots: int = Field(default=1000, ge=1)
    workers: List[int] = Field(default_factory=lambda: [1])
    w: Optional[int] = Field(default=None, ge=1)
    n_com: Optional[int] = Field(default=None, ge=1)
    n_buf: Optional[int] = Field(default=None, ge=0)
    seed: int = Field(default=12345, ge=0)
    modes: List[Mode] = Field(default_factory=lambda: ["global", "sliding", "parallel"])
    decoder: Literal["uf", "oracle"] = "uf"
    growth: Growth = Growth.HALF
    include_pipeline: bool = False
    tau_rd: Optional[float] = Field(default=None, gt=0)
    output: Optional[str] = None
    csv: Optional[str] = None

    @field_validator("distances")
    @classmethod
    def _check_distances(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("at least one distance is required")
        for d in value:
            if d < 3 or d % 2 == 0:
                raise ValueError(f"distance {d} must be an odd integer >= 3")
        return value

    @field_validator("workers")
    @classmethod
    def _check_workers(cls, value: List[int]) -> List[int]:
        if not value or any(n < 1 for n in value):
            raise ValueError("worker counts must be >= 1")
        return value

    @field_validator("p")
    @classmethod
    def _check_p(cls, value: float) -> float:
        if not 0.0 <= value < 0.5:
            raise ValueError("p must lie in [0, 0.5)")
        return value

    def rounds_for(self, d: int) -> int:
        """Absolute rounds when given, otherwise rounds_per_d * d"""
        return self.rounds if self.rounds is not None else self.rounds_per_d * d

    def window_unit(self, d: int) -> int:
        return self.w or d


class HarnessSettings(BaseModel):
    """Overrides read from PWDEC_* environment variables"""
    workers: Optional[List[int]] = None
    log_level: LogLevel = "WARNING"

    @field_validator("workers", mode="before")
    @classmethod
    def _split_workers(cls, value: Any):
        if isinstance(value, str):
            return [int(part) for part in value.replace(" ", "").split(",") if part]
        if isinstance(value, int):
            return [value]
        return value

    @field_validator("log_level", mode="before")
    @classmethod
    def _upper_level(cls, value: Any):
        return value.strip().upper() if isinstance(value, str) else value

    @classmethod
    def from_env(cls, environ: Optional[Mapping[str, str]] = None) -> "HarnessSettings":
        environ = os.environ if environ is None else environ
        values = {}
        for name in ("workers", "log_level"):
            raw = environ.get(ENV_PREFIX + name.upper())
            if raw:
                values[name] = raw
        try:
            return cls(**values)
        except (ValidationError, ValueError) as exc:
            raise ConfigError(f"invalid {ENV_PREFIX}* environment: {exc}") from exc


class PlanRequest(BaseModel):
    """Inputs for the resource plan: distance, timings and the logical workload"""
    model_config = ConfigDict(extra="forbid")

    d: int = Field(ge=1)
    w: Optional[int] = Field(default=None, ge=1)
    tau_rd: float = Field(gt=0)
    tau_W: float = Field(gt=0)
    tau_0: float = Field(default=1e-9, gt=0)
    n_par: Optional[int] = Field(default=None, ge=1)
    logical_qubits: int = Field(default=100, ge=1)
    k: int = Field(default=1, ge=0)


def read_config_file(path: str) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = yaml.safe_load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping of keys to values")
    return data


def resolve_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None,
                   settings: Optional[HarnessSettings] = None) -> ExperimentConfig:
    """Merge config file < environment < command-line overrides"""
    values: Dict[str, Any] = read_config_file(path) if path else {}
    settings = settings or HarnessSettings.from_env()
    if settings.workers:
        values["workers"] = settings.workers
    values.update({key: value for key, value in (overrides or {}).items() if value is not None})
    try:
        return ExperimentConfig(**values)
    except ValidationError as exc:
        raise ConfigError(f"invalid experiment config: {exc}") from exc

"""
cli/config.py - Run configuration for the command-line tools

A run is described by `key = value` lines (with `#` comments) or by a YAML
mapping. Every key maps onto one validated field; the defaults reproduce the
GYS experiment with the 50:50 beam splitter.
"""

import logging
import os
from typing import Any, Dict, Optional

import yaml
from pydantic import AliasChoices, BaseModel, ConfigDict, Field, ValidationError, field_validator

from core.channel import GYS_ALPHA_DB_PER_KM, GYS_E_D, GYS_ETA_DET, GYS_Y0, RANDOM_BACKGROUND_ERROR, ChannelParams
from core.errors import ConfigError
from core.keyrate import ProtocolParams
from core.numerics import DEFAULT_QUADRATURE_POINTS, QuadratureSpec
from core.optimizer import SearchDomain
from core.photon_stats import DEFAULT_N_MAX, DEFAULT_TAIL_TOLERANCE, SourceConfig

logger = logging.getLogger(__name__)

# Short names accepted in configuration files
ALIASES = {
    "alpha": "alpha_db_per_km",
    "ed": "e_d",
    "e0": "e_0",
    "y0": "y_0",
    "q": "q_eff",
}


def _field(default: Any, name: str, **kwargs: Any) -> Any:
    choices = [name] + [alias for alias, target in ALIASES.items() if target == name]
    return Field(default, validation_alias=AliasChoices(*choices), **kwargs)


class RunConfig(BaseModel):
    """Everything a CLI run needs: channel, protocol, source, numerics and search box."""

    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    # Channel
    alpha_db_per_km: float = _field(GYS_ALPHA_DB_PER_KM, "alpha_db_per_km", ge=0.0)
    eta_det: float = _field(GYS_ETA_DET, "eta_det", ge=0.0, le=1.0)
    e_d: float = _field(GYS_E_D, "e_d", ge=0.0, le=1.0)
    e_0: float = _field(RANDOM_BACKGROUND_ERROR, "e_0", ge=0.0, le=1.0)
    y_0: float = _field(GYS_Y0, "y_0", ge=0.0, le=1.0)

    # Protocol
    q_eff: float = _field(1.0, "q_eff", gt=0.0, le=1.0)
    f_ec: float = Field(1.22, ge=1.0)

    # Source used when intensities are not re-optimised, and by `validate`
    mu1: float = Field(1e-4, ge=0.0)
    mu2: float = Field(0.55, ge=0.0)
    t: float = Field(0.5, ge=0.0, le=1.0)

    # Numerics
    n_max: int = Field(DEFAULT_N_MAX, ge=2)
    tail_tolerance: float = Field(DEFAULT_TAIL_TOLERANCE, gt=0.0)
    quad_points: int = Field(DEFAULT_QUADRATURE_POINTS, ge=16)

    # Optimiser
    mu1_min: float = Field(1e-6, gt=0.0)
    mu1_max: float = Field(1.0, gt=0.0)
    mu2_min: float = Field(1e-3, gt=0.0)
    mu2_max: float = Field(2.0, gt=0.0)
    grid_points: int = Field(17, ge=2)
    optimize_t: bool = False
    reoptimize: bool = True

    # Execution
    workers: int = Field(1, ge=1)
    output: Optional[str] = None

    @field_validator("quad_points")
    @classmethod
    def validate_even(cls, v: int) -> int:
        if v % 2:
            raise ValueError("quad_points must be even")
        return v

    def channel(self) -> ChannelParams:
        return ChannelParams(
            alpha_db_per_km=self.alpha_db_per_km, eta_det=self.eta_det, e_d=self.e_d, e_0=self.e_0, y_0=self.y_0
        )

    def protocol(self) -> ProtocolParams:
        return ProtocolParams(q_eff=self.q_eff, f_ec=self.f_ec)

    def source(self) -> SourceConfig:
        return SourceConfig(mu1=self.mu1, mu2=self.mu2, t=self.t)

    def quadrature(self) -> QuadratureSpec:
        return QuadratureSpec(points=self.quad_points)

    def search_domain(self) -> SearchDomain:
        return SearchDomain(
            mu1_min=self.mu1_min,
            mu1_max=self.mu1_max,
            mu2_min=self.mu2_min,
            mu2_max=self.mu2_max,
            grid_points=self.grid_points,
            t=self.t,
            optimize_t=self.optimize_t,
        )


def _canonical(key: str) -> str:
    return ALIASES.get(key, key)


def _describe(exc: ValidationError, lines: Dict[str, int]) -> ConfigError:
    """Turn the first pydantic error into a ConfigError naming the key and its line."""
    error = exc.errors()[0]
    key = str(error["loc"][0]) if error["loc"] else ""
    return ConfigError(f"{key or 'config'}: {error['msg']}", line=lines.get(_canonical(key)))


def build_config(values: Dict[str, Any], lines: Optional[Dict[str, int]] = None) -> RunConfig:
    """
    Validate a mapping of configuration keys.

    Raises:
        ConfigError: On unknown keys or a violated constraint
    """
    lines = lines or {}
    try:
        config = RunConfig.model_validate(values)
        # Cross-field constraints of the component models
        config.search_domain()
    except ValidationError as e:
        raise _describe(e, lines) from e
    return config


def parse_config(text: str) -> RunConfig:
    """
    Parse `key = value` lines into a RunConfig.

    Blank lines and everything after `#` are ignored. Omitted keys keep their
    GYS defaults.

    Raises:
        ConfigError: On a malformed line, a repeated key or a failed validation;
            the message carries the 1-based line number where known
    """
    values: Dict[str, str] = {}
    lines: Dict[str, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=number)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=number)
        canonical = _canonical(key)
        if canonical in lines:
            raise ConfigError(f"duplicate key {key!r} (first set on line {lines[canonical]})", line=number)
        values[key] = value
        lines[canonical] = number

    config = build_config(values, lines)
    logger.debug("Parsed run configuration", extra={"event": "config_parsed", "keys": sorted(lines)})
    return config


def load_config(path: Optional[str]) -> RunConfig:
    """
    Load a run configuration file; None gives the defaults.

    Files ending in .yaml or .yml are read as a YAML mapping, anything else as
    `key = value` text.

    Raises:
        ConfigError: If the file is missing, malformed or invalid
    """
    if path is None:
        return RunConfig()
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")

    with open(path, "r", encoding="utf-8") as f:
        text = f.read()

    if path.endswith((".yaml", ".yml")):
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"invalid YAML in {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"{path} must contain a mapping of configuration keys")
        canonical = [_canonical(str(key)) for key in data]
        if len(set(canonical)) != len(canonical):
            raise ConfigError(f"{path} sets the same key under two names")
        return build_config(data)

    return parse_config(text)

import math
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml
from dotenv import dotenv_values
from pydantic import Field, ValidationError, computed_field, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .errors import ConfigurationError


class BearingConvention(str, Enum):
    PAPER = "paper"
    NORTH_REFERENCED = "north_referenced"


class DownlinkDenominator(str, Enum):
    FULL_BANDWIDTH = "full_bandwidth"
    PAPER_LITERAL = "paper_literal"


class InvocationMode(str, Enum):
    SAMPLED = "sampled"
    FULL = "full"


class SimConfig(BaseSettings):
    """Simulation parameters; keys double as config file and CHESTNUT_* env names."""

    # --- Region and coverage ---
    phi_min: float = Field(default=31.050, description="Minimal latitude of the region")
    phi_max: float = Field(default=31.372, description="Maximal latitude of the region")
    lambda_min: float = Field(default=121.259, description="Minimal longitude of the region")
    lambda_max: float = Field(default=121.640, description="Maximal longitude of the region")
    r_min: int = Field(default=600, description="Minimal server coverage radius (m)")
    r_max: int = Field(default=1200, description="Maximal server coverage radius (m)")

    # --- Population sizes ---
    n_u: int = Field(default=2000, description="Number of users")
    n_s: int = Field(default=135, description="Number of services")
    p: int = Field(default=3, description="Maximal resource preference/supply level")

    # --- Temporal alignment and selection ---
    delta_t: float = Field(default=30, description="Interval for time alignment (s)")
    t_max: float = Field(default=3600, description="Maximum system time (s)")
    c_min: int = Field(default=30, description="Minimum user timestamp count")
    s: int = Field(default=3, description="Maximum stationary run length")
    stationary_epsilon: float = Field(default=0.0, description="Coordinate tolerance (deg) for 'same position'")

    # --- QoS scale constants ---
    theta_rt: float = Field(default=1.6, description="Base delay for response time (s)")
    theta_nj: float = Field(default=160, description="Base jitter (ms)")
    k: int = Field(default=5, description="History window length for load and direction changes")
    b_c: float = Field(default=0.5, description="Service packet size first item (MB)")
    b_e: float = Field(default=512, description="Edge server bandwidth first item (Mbps)")

    # --- Load simulation ---
    seed: int = Field(default=0, description="Root seed for every random substream")
    disturbance_eps: float = Field(default=0.05, description="Half-width of the start-of-step load disturbance")
    rho_min: float = Field(default=0.01, description="Lower utilization clamp")
    rho_max: float = Field(default=0.99, description="Upper utilization clamp")
    init_load_low: float = Field(default=0.05, description="Lower bound of initial utilizations")
    init_load_high: float = Field(default=0.30, description="Upper bound of initial utilizations")
    load_scale_low: float = Field(default=0.1, description="Lower bound of the shared load scale g")
    load_scale_high: float = Field(default=0.95, description="Upper bound of the shared load scale g")

    # --- Model variants ---
    earth_radius_m: float = Field(default=6_371_000.0, description="Sphere radius for great-circle distances")
    bearing_convention: BearingConvention = Field(default=BearingConvention.PAPER)
    downlink_denominator: DownlinkDenominator = Field(default=DownlinkDenominator.FULL_BANDWIDTH)
    invocation_mode: InvocationMode = Field(default=InvocationMode.SAMPLED)
    services_per_snapshot: int = Field(default=1, description="Distinct services drawn per snapshot in sampled mode")

    # --- Inputs ---
    n_vehicles: int = Field(default=50, description="Synthetic vehicle count")
    n_stations: int = Field(default=600, description="Synthetic base-station count")
    gps_col_vehicle: int = Field(default=0)
    gps_col_time: int = Field(default=1)
    gps_col_lon: int = Field(default=2)
    gps_col_lat: int = Field(default=3)
    gps_col_speed: int = Field(default=4)
    gps_col_direction: int = Field(default=5)
    gps_time_format: str = Field(default="epoch", description="'epoch' or a strptime pattern")
    gps_has_header: bool = Field(default=False)
    stations_has_header: bool = Field(default=False)
    stations_col_lon: int = Field(default=0)
    stations_col_lat: int = Field(default=1)

    # --- Outputs ---
    out_dir: Path = Field(default=Path("chestnut_out"))
    spill_threshold: int = Field(default=1_000_000, description="Buffered records before spilling to disk")
    rt_bin_width: float = Field(default=0.05, description="Response-time histogram bin width (s)")
    nj_bin_width: float = Field(default=10.0, description="Jitter histogram bin width (ms)")

    # --- Logging ---
    log_level: str = Field(default="INFO", description="Logging level")
    progress: bool = Field(default=True, description="Show a progress bar over timestamps")

    model_config = SettingsConfigDict(
        env_prefix="CHESTNUT_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
        case_sensitive=False,
    )

    @model_validator(mode="after")
    def check_invariants(self) -> "SimConfig":
        checks = [
            (self.phi_min < self.phi_max, "phi_min", "phi_min must be below phi_max"),
            (self.lambda_min < self.lambda_max, "lambda_min", "lambda_min must be below lambda_max"),
            (0 < self.r_min <= self.r_max, "r_min", "need 0 < r_min <= r_max"),
            (self.delta_t > 0, "delta_t", "delta_t must be positive"),
            (self.t_max >= self.delta_t, "t_max", "t_max must be at least delta_t"),
            (self.p >= 1, "p", "p must be at least 1"),
            (self.n_s >= 1, "n_s", "n_s must be at least 1"),
            (self.n_u >= 1, "n_u", "n_u must be at least 1"),
            (self.c_min >= 1, "c_min", "c_min must be at least 1"),
            (self.s >= 1, "s", "s must be at least 1"),
            (self.k >= 2, "k", "k must be at least 2"),
            (self.theta_rt > 0 and self.theta_nj > 0, "theta_rt", "base delay and jitter must be positive"),
            (self.b_c > 0 and self.b_e > 0, "b_c", "packet and bandwidth bases must be positive"),
            (0 < self.rho_min < self.rho_max < 1, "rho_min", "need 0 < rho_min < rho_max < 1"),
            (self.disturbance_eps >= 0, "disturbance_eps", "disturbance_eps must be non-negative"),
            (0 <= self.init_load_low <= self.init_load_high < 1, "init_load_low", "invalid initial load range"),
            (0 < self.load_scale_low <= self.load_scale_high, "load_scale_low", "invalid load scale range"),
            (self.earth_radius_m > 0, "earth_radius_m", "earth_radius_m must be positive"),
            (1 <= self.services_per_snapshot <= self.n_s, "services_per_snapshot", "need 1 <= m <= n_s"),
            (self.stationary_epsilon >= 0, "stationary_epsilon", "stationary_epsilon must be non-negative"),
            (self.rt_bin_width > 0 and self.nj_bin_width > 0, "rt_bin_width", "bin widths must be positive"),
            (self.spill_threshold >= 1, "spill_threshold", "spill_threshold must be positive"),
        ]
        for ok, field, message in checks:
            if not ok:
                raise ValueError(f"{field}: {message}")
        return self

    @computed_field
    @property
    def max_timestamp(self) -> int:
        return int(math.floor(self.t_max / self.delta_t))

    def contains(self, lon: float, lat: float) -> bool:
        """True when the point lies in the configured bounding box (edges included)."""
        return self.lambda_min <= lon <= self.lambda_max and self.phi_min <= lat <= self.phi_max

    def echo(self) -> Dict[str, Any]:
        """JSON-friendly dump for the run manifest."""
        return self.model_dump(mode="json", exclude={"out_dir", "log_level", "progress"})


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a key-value (dotenv style) or YAML config file into a plain dict."""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(
            message=f"Config file not found: {path}",
            error_code="config_not_found",
            details={"path": str(path)},
        )
    if path.suffix.lower() in (".yaml", ".yml"):
        with path.open("r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
        if not isinstance(data, dict):
            raise ConfigurationError(
                message=f"YAML config must be a mapping: {path}",
                error_code="config_not_mapping",
                details={"path": str(path)},
            )
        return {str(key).lower(): value for key, value in data.items()}
    return {key.lower(): value for key, value in dotenv_values(path).items() if value is not None}


def load_config(path: Optional[Union[str, Path]] = None, **overrides: Any) -> SimConfig:
    """Build a SimConfig from an optional file plus explicit overrides.

    Overrides beat file values, which beat environment variables and defaults.
    """
    values: Dict[str, Any] = read_config_file(path) if path is not None else {}
    values.update({key: value for key, value in overrides.items() if value is not None})
    try:
        return SimConfig(**values)
    except ValidationError as e:
        raise ConfigurationError(
            message=f"Invalid configuration: {e.errors()[0].get('msg', str(e))}",
            error_code="config_invalid",
            details={"errors": [
                {"loc": list(err.get("loc", ())), "msg": err.get("msg")} for err in e.errors()
            ]},
        ) from e


@lru_cache()
def get_config() -> SimConfig:
    return SimConfig()

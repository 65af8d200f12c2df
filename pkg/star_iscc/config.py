"""Configuration models for star-iscc.

All physical quantities are stored in linear SI units. Configuration files may
spell powers in dBm and ratios in dB by using the ``_dbm`` / ``_db`` key
suffix; those keys are converted once, when the model is validated.
"""

import math
from pathlib import Path
from typing import Any, Callable, Dict, List, Literal, Optional, Tuple

import toml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from star_iscc.errors import ConfigError


def dbm_to_watt(value_dbm: float) -> float:
    """Convert dBm to watt."""
    return 10.0 ** ((value_dbm - 30.0) / 10.0)


def watt_to_dbm(value_watt: float) -> float:
    """Convert watt to dBm."""
    return 10.0 * math.log10(value_watt) + 30.0


def db_to_linear(value_db: float) -> float:
    """Convert dB to a linear ratio."""
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    """Convert a linear ratio to dB (``-inf`` for zero)."""
    if value <= 0.0:
        return float("-inf")
    return 10.0 * math.log10(value)


# key accepted in files -> (canonical field, converter)
UNIT_ALIASES: Dict[str, Tuple[str, Callable[[float], float]]] = {
    "p_bs_dbm": ("p_bs_watt", dbm_to_watt),
    "p_dr_dbm": ("p_dr_watt", dbm_to_watt),
    "noise_dbm": ("noise_watt", dbm_to_watt),
    "gamma_rad_db": ("gamma_rad_linear", db_to_linear),
    "rician_factor_db": ("rician_factor_linear", db_to_linear),
    "ref_loss_db": ("ref_loss_linear", db_to_linear),
}

INTERFERER_ANGLES_RAD: Tuple[float, ...] = (-math.pi / 3, -math.pi / 6, math.pi / 6, math.pi / 3)


class SystemConfig(BaseModel):
    """Physical and algorithmic parameters of one ISCC system instance."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    # array and population sizes
    n_tx: int = Field(default=8, ge=1)
    n_rx: int = Field(default=8, ge=1)
    n_ris: int = Field(default=40, ge=1)
    n_dr: int = Field(default=4, ge=0)
    n_interferer: int = Field(default=4, ge=0, le=len(INTERFERER_ANGLES_RAD))

    # radio and computing
    bandwidth_hz: float = Field(default=20e6, gt=0)
    p_dr_watt: float = Field(default=dbm_to_watt(10.0), gt=0)
    p_bs_watt: float = Field(default=dbm_to_watt(30.0), gt=0)
    noise_watt: float = Field(default=dbm_to_watt(-90.0), gt=0)
    gamma_rad_linear: float = Field(default=db_to_linear(30.0), gt=0)
    kappa: float = Field(default=1e-26, gt=0)
    phi_cycles_per_bit: float = Field(default=3e3, gt=0)
    rate_log_base: Literal["2", "e"] = "2"

    # propagation
    rician_factor_linear: float = Field(default=db_to_linear(3.0), ge=0)
    pathloss_exp: float = Field(default=2.2, gt=0)
    ref_loss_linear: float = Field(default=db_to_linear(-30.0), gt=0)

    # geometry (meters)
    ris_distance_m: float = Field(default=20.0, gt=0)
    target_distance_m: float = Field(default=10.0, gt=0)
    interferer_radius_m: float = Field(default=10.0, gt=0)
    dr_radius_m: float = Field(default=5.0, gt=0)

    # algorithms
    penalty_rho: float = Field(default=1e3, gt=0)
    wmmse_tol: float = Field(default=1e-4, gt=0)
    wmmse_max_iter: int = Field(default=50, ge=1)
    sca_tol: float = Field(default=1e-4, gt=0)
    sca_max_iter: int = Field(default=30, ge=1)
    ao_tol: float = Field(default=1e-3, gt=0)
    ao_max_iter: int = Field(default=20, ge=1)
    rank_tol: float = Field(default=1e-6, gt=0)
    star_slack_weight: float = Field(default=0.5, ge=0)
    w_init_fraction: float = Field(default=0.9, gt=0, le=1)

    rng_seed: int = Field(default=0, ge=0)

    @model_validator(mode="before")
    @classmethod
    def convert_units(cls, data: Any) -> Any:
        """Convert ``_dbm`` / ``_db`` keys into their linear fields."""
        if not isinstance(data, dict):
            return data
        data = dict(data)
        for alias, (field, convert) in UNIT_ALIASES.items():
            if alias not in data:
                continue
            if field in data:
                raise ConfigError(f"Both '{alias}' and '{field}' given; use only one")
            data[field] = convert(float(data.pop(alias)))
        return data

    @model_validator(mode="after")
    def check_split(self) -> "SystemConfig":
        """Equal side-split placement needs an even number of DRs."""
        if self.n_dr % 2:
            raise ConfigError(f"n_dr must be even for equal side split, got {self.n_dr}")
        return self

    @property
    def log_base(self) -> float:
        """Numeric base of the rate logarithm."""
        return 2.0 if self.rate_log_base == "2" else math.e

    @property
    def rate_max_bps(self) -> float:
        """Compute rate that would exhaust the whole BS budget on one DR."""
        return (self.p_bs_watt / self.kappa) ** (1.0 / 3.0) / self.phi_cycles_per_bit

    @property
    def rate_rad_nats(self) -> float:
        """Sensing rate threshold ``ln(1 + Γ_rad)``."""
        return math.log1p(self.gamma_rad_linear)

    def with_overrides(self, **overrides: Any) -> "SystemConfig":
        """Return a validated copy with some fields replaced.

        Unit-suffixed keys are accepted and replace their canonical field.

        Args:
            **overrides: Field values, canonical or unit-suffixed

        Returns:
            New SystemConfig
        """
        data = self.model_dump()
        for key in overrides:
            if key in UNIT_ALIASES:
                data.pop(UNIT_ALIASES[key][0], None)
        data.update(overrides)
        return SystemConfig.model_validate(data)

    @classmethod
    def paper(cls) -> "SystemConfig":
        """Full-scale profile (Nt=Nr=8, N=40, L=4, M=4)."""
        return cls()

    @classmethod
    def desk(cls) -> "SystemConfig":
        """Desk-scale profile used by CI (Nt=Nr=4, N=8, L=2, M=2)."""
        return cls(n_tx=4, n_rx=4, n_ris=8, n_dr=2, n_interferer=2)

    @classmethod
    def from_profile(cls, profile: str) -> "SystemConfig":
        """Build a named profile."""
        profiles = {"desk": cls.desk, "paper": cls.paper}
        if profile not in profiles:
            raise ConfigError(f"Unknown profile '{profile}', expected one of {sorted(profiles)}")
        return profiles[profile]()


SCHEME_NAMES: Tuple[str, ...] = (
    "proposed_star",
    "conventional_ris",
    "equal_split_star",
    "offloading_only",
)


class SweepSpec(BaseModel):
    """Monte Carlo sweep over one system parameter."""

    parameter: Literal["p_bs", "gamma_rad", "n_ris", "none"] = "p_bs"
    values: List[float] = Field(default_factory=lambda: [20.0, 24.0, 28.0, 32.0, 36.0, 40.0, 44.0])
    schemes: List[str] = Field(default_factory=lambda: list(SCHEME_NAMES))
    draws: int = Field(default=5, ge=1)
    seed: Optional[int] = Field(default=None, ge=0)

    @field_validator("values")
    @classmethod
    def validate_values(cls, v: List[float]) -> List[float]:
        """Values must be non-empty and strictly increasing."""
        if not v:
            raise ValueError("Sweep values must not be empty")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("Sweep values must be strictly increasing")
        return v

    @field_validator("schemes")
    @classmethod
    def validate_schemes(cls, v: List[str]) -> List[str]:
        """Schemes must be known and non-empty."""
        if not v:
            raise ValueError("At least one scheme is required")
        unknown = [s for s in v if s not in SCHEME_NAMES]
        if unknown:
            raise ValueError(f"Unknown schemes: {unknown}")
        return v

    @model_validator(mode="after")
    def check_counts(self) -> "SweepSpec":
        """RIS element counts must be positive integers."""
        if self.parameter == "n_ris":
            if any(v < 1 or v != int(v) for v in self.values):
                raise ValueError("n_ris sweep values must be positive integers")
        return self

    def apply(self, cfg: SystemConfig, value: float) -> SystemConfig:
        """Return ``cfg`` with the swept parameter set to ``value``.

        ``p_bs`` values are dBm, ``gamma_rad`` values are dB.
        """
        if self.parameter == "p_bs":
            return cfg.with_overrides(p_bs_dbm=value)
        if self.parameter == "gamma_rad":
            return cfg.with_overrides(gamma_rad_db=value)
        if self.parameter == "n_ris":
            return cfg.with_overrides(n_ris=int(value))
        return cfg


class ConvergenceSpec(BaseModel):
    """Grid of (L, P_u) pairs whose outer trajectories are recorded."""

    n_dr_values: List[int] = Field(default_factory=lambda: [2, 4])
    p_dr_dbm_values: List[float] = Field(default_factory=lambda: [10.0, 15.0])
    draws: int = Field(default=5, ge=1)

    @field_validator("n_dr_values")
    @classmethod
    def validate_counts(cls, v: List[int]) -> List[int]:
        """DR counts must be positive and even."""
        if not v or any(n < 2 or n % 2 for n in v):
            raise ValueError("n_dr_values must be non-empty, even and >= 2")
        return v

    @field_validator("p_dr_dbm_values")
    @classmethod
    def validate_powers(cls, v: List[float]) -> List[float]:
        """At least one DR power is required."""
        if not v:
            raise ValueError("p_dr_dbm_values must not be empty")
        return v


class BeampatternSpec(BaseModel):
    """Antenna counts and grid for the beampattern experiment."""

    antenna_counts: Optional[List[int]] = None
    grid_step_deg: float = Field(default=1.0, gt=0, le=10)

    @field_validator("antenna_counts")
    @classmethod
    def validate_counts(cls, v: Optional[List[int]]) -> Optional[List[int]]:
        """Antenna counts must be positive."""
        if v is not None and (not v or any(n < 1 for n in v)):
            raise ValueError("antenna_counts must be non-empty positive integers")
        return v


class ScenarioConfig(BaseModel):
    """Top-level configuration document."""

    system: SystemConfig = Field(default_factory=SystemConfig.desk)
    sweep: SweepSpec = Field(default_factory=SweepSpec)
    convergence: ConvergenceSpec = Field(default_factory=ConvergenceSpec)
    beampattern: BeampatternSpec = Field(default_factory=BeampatternSpec)

    @classmethod
    def from_file(cls, path: Path, profile: str = "desk") -> "ScenarioConfig":
        """Load configuration from TOML file on top of a named profile."""
        if not path.exists():
            raise FileNotFoundError(f"Configuration file not found: {path}")

        with open(path, "r") as f:
            data = toml.load(f)

        return cls.from_dict(data, profile)

    @classmethod
    def from_dict(cls, data: Dict, profile: str = "desk") -> "ScenarioConfig":
        """Create configuration from dictionary on top of a named profile."""
        data = dict(data)
        if "profile" in data:
            profile = data.pop("profile")
        base = SystemConfig.from_profile(profile)
        system = base.with_overrides(**data.pop("system", {}))
        return cls(system=system, **data)

    def with_seed(self, seed: Optional[int]) -> "ScenarioConfig":
        """Override every seed in the scenario."""
        if seed is None:
            return self
        return self.model_copy(
            update={
                "system": self.system.with_overrides(rng_seed=seed),
                "sweep": self.sweep.model_copy(update={"seed": seed}),
            }
        )

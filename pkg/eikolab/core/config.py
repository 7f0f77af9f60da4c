"""Configuration management for the eikolab diagnostics."""

from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Laboratory settings loaded from environment variables (prefix ``EIKO_``)."""

    model_config = SettingsConfigDict(
        env_prefix="EIKO_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",  # Allow extra fields from environment
    )

    # Logging Configuration
    log_level: str = Field(default="INFO")
    log_format: str = Field(default="simple")

    # Execution
    threads: int = Field(default=1, ge=1)

    # Field and quadrature tolerances
    unit_tol: float = Field(default=1e-12, gt=0)
    quadrature_tol: float = Field(default=1e-6, gt=0)
    support_margin_cells: int = Field(default=2, ge=0)

    # Gagliardo sums
    near_diagonal_cut: float = Field(default=1.0, ge=0)
    max_pairs: int = Field(default=2_000_000, ge=1)
    pair_seed: int = Field(default=0)

    # Entropies and kinetic fans
    fourier_degree: int = Field(default=32, ge=0)
    fan_size: int = Field(default=64, ge=1)

    # Mollifier ladders, in units of the grid spacing
    eps_ladder: List[float] = Field(default_factory=lambda: [8.0, 4.0, 2.0])

    # Characteristics and classification
    trace_dt_factor: float = Field(default=0.5, gt=0)
    singularity_threshold: float = Field(default=0.5, gt=0)
    cluster_tol_factor: float = Field(default=4.0, gt=0)
    ordering_margin_factor: float = Field(default=2.0, ge=0)
    lipschitz_tol: float = Field(default=0.1, ge=0)
    vortex_residual_factor: float = Field(default=5.0, gt=0)
    winding_tol: float = Field(default=1e-6, gt=0)

    # Burgers diagnostics
    kruzkov_count: int = Field(default=9, ge=2)
    balance_tol: float = Field(default=1e-2, gt=0)
    burgers_cet_constant: float = Field(default=10.0, gt=0)
    cet_decay_ratio: float = Field(default=0.5, gt=0)


# Global settings instance
settings = Settings()


def get_settings() -> Settings:
    """Get the global settings instance."""
    return settings


class RunConfig(BaseModel):
    """One CLI invocation. Together with its input files it fully determines the reports."""

    command: Literal["generate", "seminorm", "production", "kinetic", "classify", "burgers"]

    # Grid and generator
    kind: Optional[str] = Field(default=None, description="Generator name")
    params: Dict[str, Any] = Field(default_factory=dict, description="Generator parameters")
    nx: int = Field(default=257, ge=2)
    ny: int = Field(default=257, ge=2)
    h: float = Field(default=1.0 / 128.0, gt=0)
    x0: Optional[float] = Field(default=None, description="Defaults to a grid centered at the origin")
    y0: Optional[float] = None

    # Inputs
    field: Optional[str] = Field(default=None, description="Input field file")
    entropy: Optional[str] = Field(default=None, description="Entropy description file")

    # Diagnostics
    zeta: Optional[Tuple[float, float, float]] = Field(default=None, description="Test bump cx, cy, R")
    eps_ladder: List[float] = Field(default_factory=list, description="Mollifier radii in units of h")
    fan_size: Optional[int] = Field(default=None, ge=1)
    s: float = Field(default=1.0 / 3.0, gt=0, lt=1)
    p: float = Field(default=3.0, ge=1)
    window: Optional[Tuple[float, float, float, float]] = Field(default=None, description="x_min, x_max, y_min, y_max")
    annulus: Optional[Tuple[float, float, float, float]] = Field(default=None, description="cx, cy, r_min, r_max")
    d: Optional[float] = Field(default=None, gt=0)
    loop: Optional[Tuple[float, float, float]] = Field(default=None, description="Circle cx, cy, r")
    loop_samples: int = Field(default=512, ge=8)
    seed: Optional[int] = Field(default=None, description="Pair subsampling seed")

    # Burgers
    vl: Optional[float] = None
    vr: Optional[float] = None
    s_star: Optional[float] = None
    nt: int = Field(default=256, ge=2)
    ns: int = Field(default=256, ge=2)
    t_range: Tuple[float, float] = (0.5, 1.5)
    s_range: Tuple[float, float] = (-1.0, 1.0)
    windows: List[Tuple[float, float, float, float]] = Field(
        default_factory=list, description="Space-time windows t_min, t_max, s_min, s_max"
    )
    energy: bool = False

    # Outputs
    output: Optional[str] = None
    trace_csv: Optional[str] = None

    # Settings overrides (tolerances, thread cap, ...)
    settings: Dict[str, Any] = Field(default_factory=dict)


# Fields that change logs or speed but never report contents
_UNHASHED_SETTINGS = {"log_level", "log_format", "threads"}


def apply_overrides(overrides: Dict[str, Any]) -> Settings:
    """Validate overrides against the settings model and copy them onto the global instance."""
    if not overrides:
        return settings
    validated = Settings.model_validate({**settings.model_dump(), **overrides})
    for name in overrides:
        setattr(settings, name, getattr(validated, name))
    return settings


def effective_settings() -> Dict[str, Any]:
    """Settings that influence numerical results."""
    return {k: v for k, v in settings.model_dump().items() if k not in _UNHASHED_SETTINGS}

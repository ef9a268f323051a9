from pydantic_settings import BaseSettings, SettingsConfigDict
from typing import List, Optional
from pydantic import field_validator


class Settings(BaseSettings):
    # Application
    DEBUG: bool = False
    APP_NAME: str = "ContourOpt"
    APP_VERSION: str = "1.0.0"

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "%(asctime)s - %(name)s - %(levelname)s - [%(stage)s] %(message)s"
    LOG_FILE: str = ""  # empty disables the rotating file handler

    # Reproducibility / parallelism
    CONTOUR_OPT_SEED: Optional[int] = None  # seed fallback when --seed is absent
    THREADS: int = 1

    # Pipeline defaults
    DEFAULT_ALPHA: float = 0.05
    DEFAULT_RHO: float = 0.90
    BANDWIDTH_GRID: str = "0.03,0.06,0.09,0.12,0.18,0.24"
    ROUGHNESS_MIN_NEIGHBORS: int = 5
    OPF_STATS_MODE: str = "reference"  # "reference" or "per_stage"

    # Solver
    SOLVER_MAX_ITER: int = 20000
    SOLVER_EPS_ABS: float = 1e-5
    SOLVER_EPS_REL: float = 1e-5
    SOLVER_KKT_TOL: float = 1e-6
    SOLVER_RHO: float = 0.1
    SOLVER_SIGMA: float = 1e-6
    SOLVER_RELAXATION: float = 1.6
    SOLVER_CHECK_INTERVAL: int = 10
    SOLVER_SCALING_ITER: int = 10
    SOLVER_POLISH_DELTA: float = 1e-6
    SOLVER_POLISH_REFINE_ITER: int = 25
    SOLVER_POLISH_MAX_ROUNDS: int = 40

    # Tolerances used by dda / analysis
    FEASIBILITY_TOL: float = 1e-6
    ACTIVE_TOL: float = 1e-6
    OBJECTIVE_CHANGE_TOL: float = 1e-7

    @field_validator('DEBUG', mode='before')
    @classmethod
    def parse_bool(cls, v):
        """Parse boolean from string."""
        if isinstance(v, str):
            return v.lower() in ("true", "1", "yes")
        return bool(v)

    @field_validator('CONTOUR_OPT_SEED', mode='before')
    @classmethod
    def parse_seed(cls, v):
        """Treat an empty environment value as 'no seed'."""
        if isinstance(v, str) and not v.strip():
            return None
        return v

    @field_validator('OPF_STATS_MODE')
    @classmethod
    def check_stats_mode(cls, v):
        if v not in ("reference", "per_stage"):
            raise ValueError("OPF_STATS_MODE must be 'reference' or 'per_stage'")
        return v

    def __init__(self, **kwargs):
        super().__init__(**kwargs)
        # Convert comma-separated strings to lists after initialization
        self._bandwidth_grid_list = [float(item) for item in self.BANDWIDTH_GRID.split(',') if item.strip()]

    @property
    def bandwidth_grid_list(self) -> List[float]:
        """Get BANDWIDTH_GRID as a list of floats."""
        return self._bandwidth_grid_list

    model_config = SettingsConfigDict(
        env_file=".env",
        case_sensitive=True,
        env_file_encoding="utf-8",
        extra="ignore",
    )


settings = Settings()

from pydantic import BaseModel, Field, field_validator
from typing import Optional, Union


class RunConfig(BaseModel):
    """Resolved CLI configuration (flags > config file > settings defaults)."""
    subcommand: str
    data: Optional[str] = None
    case: Optional[str] = None
    header: bool = False
    r1: int = Field(default=0, ge=0)
    alpha: float = Field(ge=0.0, lt=1.0)
    rho: float = Field(ge=0.0, lt=1.0)
    eta: Optional[float] = Field(default=None, ge=0.0)
    zeta: Union[float, str] = "auto"
    b_bar: Optional[int] = Field(default=None, ge=1)
    seed: Optional[int] = None
    stage: str = "full"
    experiment: Optional[str] = None
    trials: Optional[int] = Field(default=None, ge=1)
    eta_sweep: Optional[str] = None
    kkt_tol: Optional[float] = Field(default=None, gt=0)
    max_iter: Optional[int] = Field(default=None, ge=1)
    out: str = "out"
    threads: int = Field(default=1, ge=1)
    no_timestamp: bool = False

    @field_validator('zeta', mode='before')
    @classmethod
    def parse_zeta(cls, v):
        if isinstance(v, str):
            if v.strip().lower() == "auto":
                return "auto"
            v = float(v)
        if v <= 0:
            raise ValueError("zeta must be > 0 or 'auto'")
        return float(v)

    @field_validator('stage')
    @classmethod
    def check_stage(cls, v):
        if v not in ("full", "z-only"):
            raise ValueError("stage must be 'full' or 'z-only'")
        return v

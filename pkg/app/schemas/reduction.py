from pydantic import BaseModel, Field
from typing import List, Optional


class ReductionReport(BaseModel):
    """Provenance chain D -> D_α -> D_α^z -> D_α^η with every parameter used."""
    seed: int
    alpha: float
    zeta: float
    rho: float
    b_bar: int
    D: int
    D_alpha: int
    z: int
    varrho_bound: float
    eta: float
    z_eta: int
    saturated: bool = False
    weights: List[int] = Field(default_factory=list)
    indices: List[int] = Field(default_factory=list)       # D_α^z, positions in the loaded data
    eta_indices: List[int] = Field(default_factory=list)   # D_α^η, positions in the loaded data
    generated_at: Optional[str] = None

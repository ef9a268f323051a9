from pydantic import BaseModel
from typing import List, Optional


class AlphaFilterReport(BaseModel):
    """JSON summary of one α-process run."""
    alpha: float
    zeta: float
    zeta_selected_automatically: bool = False
    D: int
    D_alpha: int
    kept_indices: List[int]
    seed: Optional[int] = None
    generated_at: Optional[str] = None

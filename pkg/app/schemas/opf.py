from pydantic import BaseModel, Field
from typing import List, Optional

from app.schemas.reduction import ReductionReport


class OpfStageReport(BaseModel):
    """One row of the optimization-results table."""
    stage: str
    data_points: int
    constraint_rows: int
    generated_rows: int
    base_rows: int
    status: str
    objective: float
    gap_percent: Optional[float] = None
    iterations: int
    wall_time_s: Optional[float] = None


class OpfReport(BaseModel):
    case: str
    n: int
    m: int
    stats_mode: str
    stages: List[OpfStageReport]
    reduction: ReductionReport
    ordering_holds: bool
    generated_at: Optional[str] = None


class EtaSweepRow(BaseModel):
    eta: float
    z_eta: int
    objective: float
    gap_percent: float

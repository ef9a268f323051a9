import enum
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.core.config import settings


class SolveStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITER_LIMIT = "iter_limit"


class SolverOptions(BaseModel):
    """Tolerances and iteration controls for the ADMM solver."""
    model_config = ConfigDict(frozen=True)

    eps_abs: float = Field(default_factory=lambda: settings.SOLVER_EPS_ABS)
    eps_rel: float = Field(default_factory=lambda: settings.SOLVER_EPS_REL)
    kkt_tol: float = Field(default_factory=lambda: settings.SOLVER_KKT_TOL)
    max_iter: int = Field(default_factory=lambda: settings.SOLVER_MAX_ITER)
    rho: float = Field(default_factory=lambda: settings.SOLVER_RHO)
    sigma: float = Field(default_factory=lambda: settings.SOLVER_SIGMA)
    relaxation: float = Field(default_factory=lambda: settings.SOLVER_RELAXATION)
    check_interval: int = Field(default_factory=lambda: settings.SOLVER_CHECK_INTERVAL)
    scaling_iter: int = Field(default_factory=lambda: settings.SOLVER_SCALING_ITER)
    adaptive_rho: bool = True
    adaptive_rho_interval: int = 50
    polish: bool = True
    polish_delta: float = Field(default_factory=lambda: settings.SOLVER_POLISH_DELTA)
    polish_refine_iter: int = Field(default_factory=lambda: settings.SOLVER_POLISH_REFINE_ITER)
    polish_max_rounds: int = Field(default_factory=lambda: settings.SOLVER_POLISH_MAX_ROUNDS)
    polish_trigger: float = 1e-3
    eps_prim_inf: float = 1e-5
    eps_dual_inf: float = 1e-5
    stall_tol: float = 1e-3
    record_trace: bool = False


class TraceRow(BaseModel):
    iteration: int
    primal_residual: float
    dual_residual: float
    rho: float


class SolveResult(BaseModel):
    """Solution of one assembled program.

    Multipliers follow the sign convention Qx + c + Eᵀν + Gᵀλ + μ = 0 with
    λ >= 0, and μ_i > 0 (< 0) at an active upper (lower) bound.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    x: np.ndarray
    objective: float
    status: SolveStatus
    iterations: int
    primal_residual: float
    dual_residual: float
    complementarity: float = 0.0
    eq_duals: Optional[np.ndarray] = None
    ineq_duals: Optional[np.ndarray] = None
    bound_duals: Optional[np.ndarray] = None
    polished: bool = False
    certificate: Optional[str] = None
    trace: List[TraceRow] = Field(default_factory=list)

    @property
    def is_optimal(self) -> bool:
        return self.status == SolveStatus.OPTIMAL

    def active_rows(self, G, h, tol: float) -> np.ndarray:
        """Inequality rows with |G x - h| <= tol·(1 + |h|)."""
        if G is None or G.shape[0] == 0:
            return np.zeros(0, dtype=np.int64)
        slack = h - G @ self.x
        return np.flatnonzero(np.abs(slack) <= tol * (1.0 + np.abs(h)))

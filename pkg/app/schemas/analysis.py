from pydantic import BaseModel, Field
from typing import Dict, List, Optional


class BoundExperiment(BaseModel):
    """Observed success frequency against a theoretical lower bound."""
    name: str
    trials: int
    seed: int
    observed: float = Field(ge=0.0, le=1.0)
    sigma: float
    bound: float
    verdict: bool
    failures: int = 0
    parameters: Dict[str, float] = Field(default_factory=dict)
    note: Optional[str] = None


class VarrhoReport(BaseModel):
    experiments: List[BoundExperiment]
    all_respected: bool
    assumption_violated: bool = False
    generated_at: Optional[str] = None


class PhiEstimate(BaseModel):
    eta: float
    phi_lower: float
    phi_lower_second_order: Optional[float] = None
    phi_measured: Optional[float] = None
    jacobian_norm: float
    hessian_norm: Optional[float] = None
    condition_number: float
    eta_hat: float
    respected: Optional[bool] = None


class PhiReport(BaseModel):
    estimates: List[PhiEstimate]
    respected_count: int
    instances: int
    generated_at: Optional[str] = None


class OmegaPoint(BaseModel):
    eta: float
    successes: int
    trials: int
    frequency: float
    sigma: float


class OmegaReport(BaseModel):
    points: List[OmegaPoint]
    violations: List[float] = Field(default_factory=list)  # η values where ω̂ rose beyond 3σ
    monotone: bool
    seed: int
    generated_at: Optional[str] = None


class ScenarioReport(BaseModel):
    N: int
    alpha: float
    trials: int
    probes: int
    inclusion_frequency: float      # 𝒳_P ⊂ 𝒳_S
    difference_frequency: float     # 𝒳_P ≠ 𝒳_S
    regime: str                     # "N<=1/alpha" or "N>1/alpha"
    scenario_sample_size: int       # e(n − ln ε)/(β(e − 1)) for the header parameters
    epsilon: float
    beta: float
    n: int
    generated_at: Optional[str] = None


class CcMembership(BaseModel):
    """Monte-Carlo estimate of P[g(x, ξ) <= 0]."""
    probability: float
    lower: float
    upper: float
    draws: int
    beta: float
    member: bool


class ScalingReport(BaseModel):
    etas: List[float]
    mean_z_eta: List[float]
    slope: float
    dimension: int
    monotone: bool
    seeds: int
    generated_at: Optional[str] = None

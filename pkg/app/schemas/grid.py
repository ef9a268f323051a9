from pydantic import BaseModel, Field, field_validator, model_validator
from typing import List, Optional


class BusSpec(BaseModel):
    id: int
    demand_mw: float = 0.0
    name: Optional[str] = None


class BranchSpec(BaseModel):
    from_bus: int
    to_bus: int
    susceptance: float  # per-unit on the case base
    limit_mw: float = Field(gt=0)

    @field_validator('susceptance')
    @classmethod
    def nonzero_susceptance(cls, v):
        if v == 0:
            raise ValueError("susceptance must be nonzero")
        return v

    @model_validator(mode="after")
    def distinct_ends(self):
        if self.from_bus == self.to_bus:
            raise ValueError("branch must connect two different buses")
        return self


class GeneratorSpec(BaseModel):
    bus: int
    p_min_mw: float
    p_max_mw: float
    cost_c2: float = Field(ge=0)  # $/MW²h
    cost_c1: float = 0.0          # $/MWh
    cost_c0: float = 0.0          # $

    @model_validator(mode="after")
    def ordered_limits(self):
        if self.p_min_mw > self.p_max_mw:
            raise ValueError("p_min_mw must not exceed p_max_mw")
        return self


class RenewableSpec(BaseModel):
    bus: int
    forecast_mw: float


class GridCase(BaseModel):
    """DC grid description read from a case JSON file."""
    name: str
    base_mva: float = Field(default=100.0, gt=0)
    reference_bus: int
    buses: List[BusSpec] = Field(min_length=2)
    branches: List[BranchSpec] = Field(min_length=1)
    generators: List[GeneratorSpec] = Field(min_length=1)
    renewables: List[RenewableSpec] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_references(self):
        ids = [bus.id for bus in self.buses]
        if len(set(ids)) != len(ids):
            raise ValueError("bus ids must be unique")
        known = set(ids)
        if self.reference_bus not in known:
            raise ValueError(f"reference_bus {self.reference_bus} is not a bus id")
        for k, br in enumerate(self.branches):
            if br.from_bus not in known or br.to_bus not in known:
                raise ValueError(f"branch {k} references an unknown bus")
        for k, gen in enumerate(self.generators):
            if gen.bus not in known:
                raise ValueError(f"generator {k} references an unknown bus")
        for k, ren in enumerate(self.renewables):
            if ren.bus not in known:
                raise ValueError(f"renewable {k} references an unknown bus")
        return self

    @property
    def bus_position(self) -> dict:
        return {bus.id: k for k, bus in enumerate(self.buses)}

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    @property
    def n_gen(self) -> int:
        return len(self.generators)

    @property
    def n_renewable(self) -> int:
        return len(self.renewables)

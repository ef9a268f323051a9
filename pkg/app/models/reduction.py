from typing import Dict, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.models.dataset import DataSet


class SamplingPlan(BaseModel):
    """Sample size z chosen so that the hypergeometric bound reaches ρ."""
    model_config = ConfigDict(frozen=True)

    rho: float = Field(ge=0.0, lt=1.0)
    b_bar: int = Field(ge=1)
    alpha: float
    source_size: int
    d_alpha: int
    z: int
    bound: float  # ϱ̲(z)


class SdsResult(BaseModel):
    """Survivors of strategic data selection.

    ``selected`` holds positions into the input subset, ``weights`` the number
    of input points represented by each survivor (itself included). ``eta`` is
    a float for continuous data or a mapping integer-part -> radius for mixed
    data.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    selected: np.ndarray
    weights: np.ndarray
    assignment: np.ndarray  # survivor slot of every input point
    eta: Union[float, Dict[Tuple[int, ...], float]]
    input_size: int
    saturated: bool = False
    points: Optional[DataSet] = None

    @property
    def z_eta(self) -> int:
        return int(self.selected.shape[0])


class ReductionOutcome(BaseModel):
    """Every intermediate of D -> D_α -> D_α^z -> D_α^η.

    ``z_indices`` are positions in the source data; ``sds`` is None when
    thinning was skipped.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    source: DataSet
    zeta: float
    zeta_auto: bool
    kept_indices: np.ndarray
    plan: SamplingPlan
    z_indices: np.ndarray
    sds: Optional[SdsResult] = None
    seed: int

    @property
    def filtered(self) -> DataSet:
        return self.source.take(self.kept_indices)

    @property
    def sampled(self) -> DataSet:
        return self.source.take(self.z_indices)

    @property
    def thinned(self) -> DataSet:
        if self.sds is None:
            return self.sampled
        return self.sds.points

    @property
    def eta_indices(self) -> np.ndarray:
        if self.sds is None:
            return self.z_indices
        return self.z_indices[self.sds.selected]

    @property
    def eta_weights(self) -> np.ndarray:
        if self.sds is None:
            return np.ones(self.z_indices.shape[0], dtype=np.int64)
        return self.sds.weights

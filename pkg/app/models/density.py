from typing import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator


class DensityEstimate(BaseModel):
    """Vicinity counts and the joint-probability estimate counts / D at bandwidth ζ.

    ``reference_size`` is the D of the data the counts were taken against. It
    stays fixed when the estimate is restricted to a subset.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    counts: np.ndarray
    bandwidth: float
    reference_size: int

    @model_validator(mode="after")
    def _check(self):
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be > 0")
        if self.counts.size and (self.counts.min() < 1 or self.counts.max() > self.reference_size):
            raise ValueError("counts must lie in [1, reference_size]")
        return self

    @property
    def probabilities(self) -> np.ndarray:
        return self.counts / float(self.reference_size)

    @property
    def size(self) -> int:
        return int(self.counts.shape[0])

    def restrict(self, indices: Sequence[int]) -> "DensityEstimate":
        """Counts of a subset, frozen against the original D."""
        idx = np.asarray(indices, dtype=np.int64)
        return DensityEstimate(counts=self.counts[idx], bandwidth=self.bandwidth,
                               reference_size=self.reference_size)


class AlphaFilterResult(BaseModel):
    """Outcome of the α-process: source positions whose count is at least α·D."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    kept_indices: np.ndarray
    alpha: float
    bandwidth: float
    source_size: int

    @property
    def d_alpha(self) -> int:
        return int(self.kept_indices.shape[0])

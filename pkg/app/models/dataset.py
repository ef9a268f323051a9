from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator


class UncertaintyPoint(BaseModel):
    """One sample ξ = (integer part, real part)."""
    model_config = ConfigDict(frozen=True)

    integer_part: Tuple[int, ...] = ()
    real_part: Tuple[float, ...] = ()

    @property
    def dims(self) -> Tuple[int, int]:
        return len(self.integer_part), len(self.real_part)

    @property
    def vector(self) -> np.ndarray:
        return np.array(list(self.integer_part) + list(self.real_part), dtype=float)


class DataSet(BaseModel):
    """Ordered multiset of uncertainty samples.

    Points are stored column-wise: ``integer_part`` is D x r1 (int64) and
    ``real_part`` is D x r2 (float64). ``source_indices`` keeps the position of
    every row in the originally loaded data so that subsets carry provenance.
    Derived subsets may be empty; loading enforces D >= 1.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    integer_part: np.ndarray
    real_part: np.ndarray
    source_indices: Optional[np.ndarray] = None
    name: str = ""

    @model_validator(mode="after")
    def _check_shapes(self):
        if self.integer_part.ndim != 2 or self.real_part.ndim != 2:
            raise ValueError("integer_part and real_part must be 2-D arrays")
        if self.integer_part.shape[0] != self.real_part.shape[0]:
            raise ValueError("integer_part and real_part row counts differ")
        if self.integer_part.shape[1] + self.real_part.shape[1] < 1:
            raise ValueError("point dimension r = r1 + r2 must be at least 1")
        if not np.all(np.isfinite(self.real_part)):
            raise ValueError("real_part contains non-finite values")
        if self.source_indices is None:
            object.__setattr__(self, "source_indices", np.arange(self.integer_part.shape[0]))
        elif len(self.source_indices) != self.integer_part.shape[0]:
            raise ValueError("source_indices length differs from row count")
        return self

    @classmethod
    def from_arrays(cls, integer_part=None, real_part=None, name: str = "") -> "DataSet":
        """Build a data set from array-likes; either part may be omitted."""
        if integer_part is None and real_part is None:
            raise ValueError("at least one of integer_part / real_part is required")
        if real_part is not None:
            real = np.asarray(real_part, dtype=float)
            if real.ndim == 1:
                real = real.reshape(-1, 1)
            size = real.shape[0]
        if integer_part is not None:
            ints = np.asarray(integer_part, dtype=np.int64)
            if ints.ndim == 1:
                ints = ints.reshape(-1, 1)
            size = ints.shape[0]
        if integer_part is None:
            ints = np.zeros((size, 0), dtype=np.int64)
        if real_part is None:
            real = np.zeros((size, 0), dtype=float)
        return cls(integer_part=ints, real_part=real, name=name)

    @property
    def size(self) -> int:
        return int(self.integer_part.shape[0])

    @property
    def r1(self) -> int:
        return int(self.integer_part.shape[1])

    @property
    def r2(self) -> int:
        return int(self.real_part.shape[1])

    @property
    def dims(self) -> Tuple[int, int]:
        return self.r1, self.r2

    @property
    def vectors(self) -> np.ndarray:
        """D x r float matrix, integer columns first."""
        return np.hstack([self.integer_part.astype(float), self.real_part])

    def point(self, j: int) -> UncertaintyPoint:
        if not 0 <= j < self.size:
            raise IndexError(f"point index {j} out of range for D={self.size}")
        return UncertaintyPoint(
            integer_part=tuple(int(v) for v in self.integer_part[j]),
            real_part=tuple(float(v) for v in self.real_part[j]),
        )

    def points(self) -> List[UncertaintyPoint]:
        return [self.point(j) for j in range(self.size)]

    def take(self, indices: Sequence[int], name: Optional[str] = None) -> "DataSet":
        """Subset by positions, keeping provenance."""
        idx = np.asarray(indices, dtype=np.int64)
        return DataSet(
            integer_part=self.integer_part[idx],
            real_part=self.real_part[idx],
            source_indices=self.source_indices[idx],
            name=self.name if name is None else name,
        )

    def drop(self, position: int) -> "DataSet":
        keep = np.delete(np.arange(self.size), position)
        return self.take(keep)

    def __len__(self) -> int:
        return self.size

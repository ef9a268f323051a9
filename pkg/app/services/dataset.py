"""
Loading, saving and vicinity queries for uncertainty data sets.
"""
import json
import logging
import os
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.spatial import cKDTree

from app.core.config import settings
from app.core.exceptions import (
    DataParseError, DataSetNotFound, DimensionMismatch, EmptyDataSet, NonFiniteValue,
)
from app.models.dataset import DataSet

logger = logging.getLogger(__name__)

_NON_FINITE_TOKENS = {"nan", "+nan", "-nan", "inf", "+inf", "-inf", "infinity", "+infinity", "-infinity"}


def _detect_format(path: str) -> str:
    ext = os.path.splitext(path)[1].lower()
    return "json" if ext == ".json" else "csv"


def _parse_cell(token: str, row: int, column: int, integer: bool):
    text = token.strip()
    if text.lower() in _NON_FINITE_TOKENS:
        raise NonFiniteValue(f"non-finite value '{text}' at row {row}, column {column}", row=row, column=column)
    try:
        value = float(text)
    except ValueError:
        raise DataParseError(f"cannot parse '{text}' at row {row}, column {column}", row=row, column=column)
    if not np.isfinite(value):
        raise NonFiniteValue(f"non-finite value '{text}' at row {row}, column {column}", row=row, column=column)
    if integer:
        if value != int(value):
            raise DataParseError(f"expected an integer, got '{text}' at row {row}, column {column}",
                                 row=row, column=column)
        return int(value)
    return value


def _rows_to_dataset(rows: List[List[str]], schema: Optional[Tuple[int, int]],
                     first_row: int, name: str) -> DataSet:
    if not rows:
        raise EmptyDataSet(f"dataset '{name}' has no rows")
    width = len(rows[0])
    r1, r2 = schema if schema is not None else (0, width)
    if r1 + r2 < 1:
        raise DimensionMismatch("schema must declare at least one column")

    ints = np.zeros((len(rows), r1), dtype=np.int64)
    reals = np.zeros((len(rows), r2), dtype=float)
    for k, row in enumerate(rows):
        line = first_row + k
        if len(row) != r1 + r2:
            raise DimensionMismatch(f"row {line} has {len(row)} columns, expected {r1 + r2} (r1={r1}, r2={r2})")
        for col, token in enumerate(row):
            value = _parse_cell(str(token), line, col + 1, integer=col < r1)
            if col < r1:
                ints[k, col] = value
            else:
                reals[k, col - r1] = value
    return DataSet(integer_part=ints, real_part=reals, name=name)


def load_dataset(path: str, schema: Optional[Tuple[int, int]] = None, header: bool = False) -> DataSet:
    """
    Load a data set from CSV or a JSON array of arrays.

    Args:
        path: file path; ``.json`` selects the JSON reader, anything else CSV
        schema: (r1, r2), integer columns first, then real columns. Defaults to
            all-real columns.
        header: whether the CSV has a header line

    Returns:
        DataSet with one point per row

    Raises:
        DataSetNotFound, EmptyDataSet, NonFiniteValue, DataParseError, DimensionMismatch
    """
    if not os.path.isfile(path):
        raise DataSetNotFound(f"dataset not found: {path}")

    name = os.path.basename(path)
    if _detect_format(path) == "json":
        with open(path, "r", encoding="utf-8") as f:
            try:
                payload = json.load(f, parse_constant=lambda c: c)
            except json.JSONDecodeError as e:
                raise DataParseError(f"invalid JSON in {name}: {e}")
        if not isinstance(payload, list):
            raise DataParseError(f"{name}: expected a JSON array of arrays")
        rows = []
        for k, item in enumerate(payload):
            if not isinstance(item, list):
                raise DataParseError(f"{name}: row {k + 1} is not an array", row=k + 1)
            rows.append([str(v) for v in item])
        ds = _rows_to_dataset(rows, schema, first_row=1, name=name)
    else:
        try:
            frame = pd.read_csv(path, header=0 if header else None, dtype=str,
                                keep_default_na=False, skip_blank_lines=True)
        except pd.errors.EmptyDataError:
            raise EmptyDataSet(f"dataset '{name}' is empty")
        except pd.errors.ParserError as e:
            raise DimensionMismatch(f"{name}: inconsistent column count ({e})")
        first_row = 2 if header else 1
        ragged = np.flatnonzero(frame.isna().any(axis=1).to_numpy())
        if ragged.size:
            raise DimensionMismatch(f"row {first_row + int(ragged[0])} of {name} has missing columns")
        ds = _rows_to_dataset(frame.values.tolist(), schema, first_row=first_row, name=name)

    logger.info(f"Loaded {name}: D={ds.size}, r1={ds.r1}, r2={ds.r2}")
    return ds


def save_dataset(ds: DataSet, path: str, header: bool = False) -> None:
    """Write a data set as CSV or JSON; floats are written with full precision."""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)

    if _detect_format(path) == "json":
        rows = [[int(v) for v in ds.integer_part[j]] + [float(v) for v in ds.real_part[j]]
                for j in range(ds.size)]
        with open(path, "w", encoding="utf-8") as f:
            json.dump(rows, f)
        return

    columns = [f"i{k + 1}" for k in range(ds.r1)] + [f"x{k + 1}" for k in range(ds.r2)]
    frame = pd.DataFrame(
        {**{columns[k]: ds.integer_part[:, k] for k in range(ds.r1)},
         **{columns[ds.r1 + k]: ds.real_part[:, k] for k in range(ds.r2)}},
        columns=columns,
    )
    frame.to_csv(path, index=False, header=header, float_format="%.17g")


class VicinityIndex:
    """
    Exact fixed-radius queries over a data set.

    Points are grouped by identical integer part; within a group a k-d tree
    over the real parts answers Euclidean radius queries. For pure-integer
    data a group is its own vicinity at every radius.
    """

    def __init__(self, ds: DataSet):
        self.ds = ds
        if ds.r1 > 0 and ds.size > 0:
            keys, inverse = np.unique(ds.integer_part, axis=0, return_inverse=True)
            inverse = np.asarray(inverse).ravel()
        else:
            keys, inverse = np.zeros((1, 0), dtype=np.int64), np.zeros(ds.size, dtype=np.int64)
        self.group_keys = keys
        self.group_of = inverse
        self.members: List[np.ndarray] = [np.flatnonzero(inverse == g) for g in range(keys.shape[0])]
        self.trees: Dict[int, cKDTree] = {}
        if ds.r2 > 0:
            for g, members in enumerate(self.members):
                if members.size:
                    self.trees[g] = cKDTree(ds.real_part[members])

    @property
    def n_groups(self) -> int:
        return len(self.members)

    def query(self, j: int, radius: float) -> np.ndarray:
        """Positions q with the same integer part as point j and ‖real(q) − real(j)‖ <= radius."""
        if not 0 <= j < self.ds.size:
            raise IndexError(f"point index {j} out of range for D={self.ds.size}")
        if radius < 0:
            raise ValueError("radius must be >= 0")
        g = self.group_of[j]
        members = self.members[g]
        if self.ds.r2 == 0:
            return members
        local = self.trees[g].query_ball_point(self.ds.real_part[j], r=radius)
        return np.sort(members[np.asarray(local, dtype=np.int64)])

    def count_all(self, radius: float, workers: Optional[int] = None) -> np.ndarray:
        """Vicinity count of every point, itself included."""
        if radius < 0:
            raise ValueError("radius must be >= 0")
        workers = workers or settings.THREADS
        counts = np.zeros(self.ds.size, dtype=np.int64)
        for g, members in enumerate(self.members):
            if not members.size:
                continue
            if self.ds.r2 == 0:
                counts[members] = members.size
                continue
            counts[members] = self.trees[g].query_ball_point(
                self.ds.real_part[members], r=radius, return_length=True, workers=workers)
        return counts


def vicinity_count(ds: DataSet, j: int, radius: float, index: Optional[VicinityIndex] = None) -> int:
    """
    Number of points within ``radius`` of point j, itself included.

    Raises:
        IndexError: j outside [0, D)
    """
    if not 0 <= j < ds.size:
        raise IndexError(f"point index {j} out of range for D={ds.size}")
    index = index or VicinityIndex(ds)
    return int(index.query(j, radius).size)


def underlying_set(ds: DataSet) -> DataSet:
    """Distinct points of a multiset, first occurrence kept, source order preserved."""
    if ds.size == 0:
        return ds
    _, first = np.unique(ds.vectors, axis=0, return_index=True)
    return ds.take(np.sort(first))

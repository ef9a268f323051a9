"""
Joint-probability estimation by vicinity counting, bandwidth selection and the α-process.
"""
import logging
import math
from typing import Iterable, Optional, Tuple

import numpy as np
from scipy.spatial import cKDTree

from app.core.config import settings
from app.core.exceptions import ConfigurationError
from app.models.dataset import DataSet
from app.models.density import AlphaFilterResult, DensityEstimate
from app.services.dataset import VicinityIndex

logger = logging.getLogger(__name__)


def estimate_density(ds: DataSet, zeta: float, index: Optional[VicinityIndex] = None) -> DensityEstimate:
    """
    Count the ζ-vicinity of every point against the full data set.

    Args:
        ds: data set
        zeta: bandwidth, > 0
        index: optional prebuilt index over ``ds``

    Returns:
        DensityEstimate with counts and probabilities counts / D
    """
    if zeta <= 0:
        raise ConfigurationError(f"bandwidth must be > 0, got {zeta}")
    index = index or VicinityIndex(ds)
    counts = index.count_all(zeta)
    if counts.size:
        logger.debug(f"Density at zeta={zeta}: min count {counts.min()}, max count {counts.max()}")
    return DensityEstimate(counts=counts, bandwidth=float(zeta), reference_size=ds.size)


def roughness(ds: DataSet, de: DensityEstimate, k: Optional[int] = None) -> float:
    """Mean squared deviation of each point's probability from the mean over its k nearest neighbours."""
    D = ds.size
    if D < 2:
        return 0.0
    if k is None:
        k = max(settings.ROUGHNESS_MIN_NEIGHBORS, math.ceil(D / 100))
    k = min(k, D - 1)
    tree = cKDTree(ds.vectors)
    _, neighbours = tree.query(ds.vectors, k=k + 1, workers=settings.THREADS)
    neighbours = np.asarray(neighbours).reshape(D, k + 1)
    probabilities = de.probabilities
    # drop the query point itself wherever it shows up, else the farthest neighbour
    own = neighbours == np.arange(D)[:, None]
    keep = ~own
    no_self = ~own.any(axis=1)
    keep[no_self, -1] = False
    neighbour_mean = (probabilities[neighbours] * keep).sum(axis=1) / k
    return float(np.mean((probabilities - neighbour_mean) ** 2))


def select_bandwidth(ds: DataSet, grid: Iterable[float], index: Optional[VicinityIndex] = None) -> float:
    """
    Pick the candidate bandwidth whose probability field is smoothest.

    Ties go to the smaller ζ.

    Raises:
        ConfigurationError: empty grid or non-positive candidate
    """
    candidates = sorted(float(z) for z in grid)
    if not candidates:
        raise ConfigurationError("bandwidth grid is empty")
    if candidates[0] <= 0:
        raise ConfigurationError("bandwidth candidates must be > 0")
    if len(candidates) == 1:
        return candidates[0]

    index = index or VicinityIndex(ds)
    best, best_score = None, math.inf
    for zeta in candidates:
        score = roughness(ds, estimate_density(ds, zeta, index=index))
        logger.info(f"Bandwidth candidate zeta={zeta}: roughness={score:.6e}")
        if score < best_score:
            best, best_score = zeta, score
    logger.info(f"Selected bandwidth zeta={best}")
    return best


def alpha_process(ds: DataSet, de: DensityEstimate, alpha: float) -> AlphaFilterResult:
    """
    Keep the points whose vicinity count is at least α·D (source order preserved).

    Raises:
        ConfigurationError: α outside [0, 1) or estimate not built from ``ds``
    """
    if not 0.0 <= alpha < 1.0:
        raise ConfigurationError(f"alpha must lie in [0, 1), got {alpha}")
    if de.size != ds.size:
        raise ConfigurationError("density estimate does not match the data set")
    kept = np.flatnonzero(de.counts >= alpha * de.reference_size)
    logger.info(f"Alpha-process alpha={alpha}: kept {kept.size} of {ds.size} points")
    return AlphaFilterResult(kept_indices=kept, alpha=float(alpha), bandwidth=de.bandwidth,
                             source_size=de.reference_size)


def calibrate_alpha(de: DensityEstimate, beta: float) -> float:
    """
    Largest probability level v such that at least a 1−β share of the points
    have probability >= v.
    """
    if not 0.0 < beta < 1.0:
        raise ConfigurationError(f"beta must lie in (0, 1), got {beta}")
    ordered = np.sort(de.probabilities)[::-1]
    D = ordered.size
    if D == 0:
        raise ConfigurationError("cannot calibrate a level on an empty density estimate")
    k = min(D, max(1, math.ceil((1.0 - beta) * D - 1e-9)))
    return float(ordered[k - 1])


def filter_dataset(ds: DataSet, alpha: float, zeta="auto",
                   grid: Optional[Iterable[float]] = None) -> Tuple[AlphaFilterResult, bool]:
    """
    Bandwidth choice (when ``zeta`` is "auto"), density estimate and α-process
    in one call, sharing one vicinity index.

    Returns:
        (filter result, whether ζ was selected automatically)
    """
    index = VicinityIndex(ds)
    automatic = isinstance(zeta, str)
    if automatic:
        if zeta != "auto":
            raise ConfigurationError(f"zeta must be a positive number or 'auto', got '{zeta}'")
        zeta = select_bandwidth(ds, grid or settings.bandwidth_grid_list, index=index)
    de = estimate_density(ds, float(zeta), index=index)
    return alpha_process(ds, de, alpha), automatic

"""
How the number of SDS survivors grows as η shrinks.
"""
import logging
from typing import Sequence

import numpy as np

from app.core.exceptions import ConfigurationError
from app.models.dataset import DataSet
from app.schemas.analysis import ScalingReport
from app.services.analysis.common import trial_rng
from app.services.reduction import sds_continuous

logger = logging.getLogger(__name__)


def z_eta_scaling(points: DataSet, etas: Sequence[float], seeds: int = 10, seed: int = 0) -> ScalingReport:
    """
    Mean z_η over ``seeds`` SDS runs per η and the least-squares slope of
    log z̄_η against log(1/η); for data filling an r-dimensional region the
    slope approaches r.
    """
    etas = sorted(float(e) for e in etas)
    if len(etas) < 2 or etas[0] <= 0:
        raise ConfigurationError("need at least two positive eta values")
    means = []
    for eta in etas:
        sizes = [sds_continuous(points, eta, rng=trial_rng(seed, k)).z_eta for k in range(seeds)]
        means.append(float(np.mean(sizes)))
        logger.info(f"eta={eta}: mean z_eta={means[-1]:.1f}")
    slope = float(np.polyfit(np.log(1.0 / np.asarray(etas)), np.log(means), 1)[0])
    monotone = all(b <= a for a, b in zip(means, means[1:]))
    return ScalingReport(etas=etas, mean_z_eta=means, slope=slope, dimension=points.r2,
                         monotone=monotone, seeds=seeds)

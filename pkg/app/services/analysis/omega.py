"""
Empirical check that the chance of keeping the z-sample optimum does not grow with η.
"""
import logging
import math
from typing import Optional, Sequence

import numpy as np

from app.core.exceptions import ConfigurationError, ContourOptError
from app.models.dataset import DataSet
from app.models.program import ProblemTemplate
from app.models.solver import SolverOptions
from app.schemas.analysis import OmegaPoint, OmegaReport
from app.services import dda
from app.services.analysis.common import binomial_sigma, run_trials, trial_rng
from app.services.reduction import thin

logger = logging.getLogger(__name__)


def verify_omega_monotone(tmpl: ProblemTemplate, data: DataSet, z: int, etas: Sequence[float],
                          trials: int, seed: int, threads: Optional[int] = None,
                          options: Optional[SolverOptions] = None) -> OmegaReport:
    """
    For every trial draw one z-subsample of ``data`` and thin it at every η
    with the same SDS seed; a success at η means the z-sample optimizer is
    still optimal after thinning. Frequencies that rise by more than three
    standard errors between consecutive η are reported as violations.
    """
    if not 1 <= z <= data.size:
        raise ConfigurationError(f"z must lie in [1, {data.size}], got {z}")
    etas = sorted(float(e) for e in etas)
    if not etas:
        raise ConfigurationError("eta grid is empty")

    def trial(t: int):
        rng = trial_rng(seed, t)
        subset = data.take(np.sort(rng.choice(data.size, size=z, replace=False)))
        sds_seed = int(rng.integers(0, 2 ** 31 - 1))
        try:
            optimum = dda.solve_template(tmpl, subset, options)
            return [dda.certify_optimal(tmpl, thin(subset, eta, seed=sds_seed).points, optimum.x)
                    for eta in etas]
        except ContourOptError as e:
            logger.warning(f"omega trial {t} failed: {e}")
            return None

    outcomes = [o for o in run_trials(trial, trials, threads) if o is not None]
    counted = len(outcomes)
    points = []
    for k, eta in enumerate(etas):
        successes = sum(1 for o in outcomes if o[k])
        frequency = successes / counted if counted else 0.0
        points.append(OmegaPoint(eta=eta, successes=successes, trials=counted, frequency=frequency,
                                 sigma=binomial_sigma(frequency, counted)))

    violations = []
    for prev, cur in zip(points, points[1:]):
        noise = 3.0 * math.sqrt(prev.sigma ** 2 + cur.sigma ** 2)
        if cur.frequency > prev.frequency + noise:
            violations.append(cur.eta)
    if violations:
        logger.warning(f"omega rose beyond noise at eta={violations}")
    return OmegaReport(points=points, violations=violations, monotone=not violations, seed=seed)

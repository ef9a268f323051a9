"""
Monte-Carlo check of the probability that a uniform z-subsample keeps the
optimum of the filtered program.
"""
import logging
from typing import Iterable, Optional, Tuple

import numpy as np

from app.core.exceptions import ConfigurationError, ContourOptError, PreconditionError
from app.models.dataset import DataSet
from app.models.program import ProblemTemplate
from app.models.solver import SolverOptions
from app.schemas.analysis import BoundExperiment, VarrhoReport
from app.services import dda, qpsolver
from app.services.analysis.common import binomial_sigma, bound_respected, run_trials, trial_rng
from app.services.dataset import underlying_set
from app.services.reduction import deficit, varrho_lower_bound

logger = logging.getLogger(__name__)

METHODS = ("certificate", "resolve")


def boundary_multiplicities(tmpl: ProblemTemplate, data: DataSet,
                            options: Optional[SolverOptions] = None) -> Tuple[int, int]:
    """
    Boundary points of the underlying set and the smallest number of copies
    any of them has in ``data``.

    Returns:
        (distinct boundary points, minimum multiplicity; 0 when there are none)
    """
    distinct = underlying_set(data)
    optimum = dda.solve_template(tmpl, distinct, options)
    report = dda.find_boundary_points(tmpl, distinct, optimum, options=options)
    if report.b_z == 0:
        return 0, 0
    vectors = data.vectors
    copies = [int(np.sum(np.all(vectors == distinct.vectors[k], axis=1))) for k in report.boundary_points]
    return report.b_z, min(copies)


def verify_varrho(tmpl: ProblemTemplate, data: DataSet, alpha: float, source_size: int, z: int,
                  b_bar: int, trials: int, seed: int, method: str = "certificate",
                  threads: Optional[int] = None, options: Optional[SolverOptions] = None,
                  tol: float = 1e-6, check_planting: bool = True) -> BoundExperiment:
    """
    Frequency over seeded z-subsamples of D_α whose optimum equals the D_α
    optimum, against the lower bound ϱ̲(z).

    ``method`` "certificate" tests the D_α optimizer for optimality on the
    subsample (a KKT certificate, no solve); "resolve" solves every
    subsample. Solver failures are excluded from the frequency and counted.

    Raises:
        PreconditionError: ``check_planting`` and some boundary point has
            fewer than ⌊αD⌋ copies
    """
    if method not in METHODS:
        raise ConfigurationError(f"unknown method '{method}' (expected one of {', '.join(METHODS)})")
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    d_alpha = data.size
    bound = varrho_lower_bound(z, b_bar, alpha, source_size, d_alpha)

    b_true = None
    if check_planting:
        b_true, copies = boundary_multiplicities(tmpl, data, options)
        needed = deficit(alpha, source_size)
        if b_true and copies < needed:
            raise PreconditionError(
                f"a boundary point has {copies} copies, fewer than floor(alpha*D)={needed}")

    reference = dda.solve_template(tmpl, data, options)

    def trial(t: int):
        rng = trial_rng(seed, t)
        subset = data.take(np.sort(rng.choice(d_alpha, size=z, replace=False)))
        if method == "certificate":
            return dda.certify_optimal(tmpl, subset, reference.x)
        result = qpsolver.solve(dda.assemble(tmpl, subset), options)
        if not result.is_optimal:
            return None
        return abs(result.objective - reference.objective) <= tol * max(1.0, abs(reference.objective))

    def guarded(t: int):
        try:
            return trial(t)
        except ContourOptError as e:
            logger.warning(f"trial {t} failed: {e}")
            return None

    outcomes = run_trials(guarded, trials, threads)
    failures = sum(1 for o in outcomes if o is None)
    successes = sum(1 for o in outcomes if o)
    counted = trials - failures
    observed = successes / counted if counted else 0.0
    respected = bound_respected(observed, bound, counted)
    parameters = {"z": float(z), "b_bar": float(b_bar), "alpha": float(alpha),
                  "D": float(source_size), "D_alpha": float(d_alpha)}
    if b_true is not None:
        parameters["boundary_points"] = float(b_true)
    note = None
    if b_true is not None and b_bar < b_true:
        note = f"assumption violated: b_bar={b_bar} < {b_true} boundary points"
    logger.info(f"varrho z={z}: observed {observed:.4f} vs bound {bound:.4f} ({'ok' if respected else 'VIOLATED'})")
    return BoundExperiment(
        name="varrho", trials=trials, seed=seed, observed=observed, sigma=binomial_sigma(bound, max(counted, 1)),
        bound=bound, verdict=respected, failures=failures, parameters=parameters, note=note,
    )


def verify_varrho_sweep(tmpl: ProblemTemplate, data: DataSet, alpha: float, source_size: int,
                        zs: Iterable[int], b_bar: int, trials: int, seed: int,
                        check_planting: bool = True, **kwargs) -> VarrhoReport:
    """One experiment per z; the planting check runs once."""
    experiments = [verify_varrho(tmpl, data, alpha, source_size, int(z), b_bar, trials, seed,
                                 check_planting=check_planting and k == 0, **kwargs)
                   for k, z in enumerate(zs)]
    violated = any(e.note is not None for e in experiments)
    return VarrhoReport(experiments=experiments, all_respected=all(e.verdict for e in experiments),
                        assumption_violated=violated)

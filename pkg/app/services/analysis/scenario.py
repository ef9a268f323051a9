"""
Scenario-method comparison and a Monte-Carlo membership oracle for the
chance-constrained feasible set.
"""
import logging
from typing import Callable, Optional

import numpy as np
from scipy.stats import binomtest

from app.core.exceptions import ConfigurationError
from app.models.dataset import DataSet
from app.models.program import AssembledProgram, ProblemTemplate
from app.schemas.analysis import CcMembership, ScenarioReport
from app.services import dda
from app.services.analysis.common import run_trials, trial_rng
from app.services.density import filter_dataset
from app.services.reduction import scenario_sample_size

logger = logging.getLogger(__name__)

Sampler = Callable[[np.random.Generator, int], DataSet]


def members(prog: AssembledProgram, X: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Membership of every row of X (probes x n) in the feasible set of ``prog``."""
    X = np.atleast_2d(X)
    inside = np.ones(X.shape[0], dtype=bool)
    if prog.G.shape[0]:
        inside &= np.all(prog.G @ X.T <= prog.h[:, None] + tol, axis=0)
    if prog.E.shape[0]:
        inside &= np.all(np.abs(prog.E @ X.T - prog.b[:, None]) <= tol, axis=0)
    inside &= np.all(X >= prog.lb - tol, axis=1) & np.all(X <= prog.ub + tol, axis=1)
    return inside


def _probe_box(tmpl: ProblemTemplate, low, high):
    low = tmpl.lb if low is None else np.broadcast_to(np.asarray(low, dtype=float), (tmpl.n,))
    high = tmpl.ub if high is None else np.broadcast_to(np.asarray(high, dtype=float), (tmpl.n,))
    if not (np.all(np.isfinite(low)) and np.all(np.isfinite(high))):
        raise ConfigurationError("probe box must be finite; pass probe_low/probe_high")
    return low, high


def compare_scenario_method(tmpl: ProblemTemplate, sampler: Sampler, N: int, alpha: float,
                            trials: int, seed: int, probes: int = 1000, pool_size: int = 5000,
                            zeta="auto", probe_low=None, probe_high=None, epsilon: float = 0.01,
                            beta: float = 0.05, threads: Optional[int] = None) -> ScenarioReport:
    """
    Compare the scenario feasible set of N iid samples with the contour proxy
    D-DA(D_α) built from a dense pool.

    Per trial, uniform probes from the box decide whether the proxy set is
    contained in the scenario set and whether the two differ at all.
    """
    if N < 1 or trials < 1 or probes < 1:
        raise ConfigurationError("N, trials and probes must be >= 1")
    pool = sampler(trial_rng(seed, 0), pool_size)
    filtered, _ = filter_dataset(pool, alpha, zeta)
    proxy = dda.assemble(tmpl, pool.take(filtered.kept_indices))
    low, high = _probe_box(tmpl, probe_low, probe_high)
    logger.info(f"Scenario comparison: pool {pool_size}, D_alpha={filtered.d_alpha}, N={N}")

    def trial(t: int):
        rng = trial_rng(seed, t + 1)
        scenario = dda.assemble(tmpl, sampler(rng, N))
        X = rng.uniform(low, high, size=(probes, tmpl.n))
        in_proxy, in_scenario = members(proxy, X), members(scenario, X)
        return bool(not np.any(in_proxy & ~in_scenario)), bool(np.any(in_proxy != in_scenario))

    outcomes = run_trials(trial, trials, threads)
    return ScenarioReport(
        N=N, alpha=alpha, trials=trials, probes=probes,
        inclusion_frequency=sum(1 for inc, _ in outcomes if inc) / trials,
        difference_frequency=sum(1 for _, diff in outcomes if diff) / trials,
        regime="N<=1/alpha" if N * alpha <= 1.0 else "N>1/alpha",
        scenario_sample_size=scenario_sample_size(tmpl.n, epsilon, beta),
        epsilon=epsilon, beta=beta, n=tmpl.n,
    )


def estimate_cc_feasibility(tmpl: ProblemTemplate, x: np.ndarray, sampler: Sampler,
                            draws: int = 100_000, seed: int = 0, beta: float = 0.05,
                            tol: float = 1e-9, chunk: int = 10_000) -> CcMembership:
    """
    Monte-Carlo estimate of P[g(x, ξ) <= 0] with a 95 % Wilson interval;
    x is reported as a member when the estimate reaches 1 − β.
    """
    if draws < 1:
        raise ConfigurationError("draws must be >= 1")
    rng = np.random.default_rng(seed)
    x = np.asarray(x, dtype=float)
    satisfied, done = 0, 0
    while done < draws:
        size = min(chunk, draws - done)
        sample = sampler(rng, size)
        G, h = tmpl.generator.stack(sample.vectors)
        worst = (G @ x - h).reshape(size, tmpl.m).max(axis=1)
        satisfied += int(np.count_nonzero(worst <= tol))
        done += size
    interval = binomtest(satisfied, draws).proportion_ci(confidence_level=0.95, method="wilson")
    probability = satisfied / draws
    return CcMembership(probability=probability, lower=float(interval.low), upper=float(interval.high),
                        draws=draws, beta=beta, member=probability >= 1.0 - beta)

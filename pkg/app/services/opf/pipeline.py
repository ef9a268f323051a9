"""
End-to-end d-OPF study: reduce the deviation data and solve the d-OPF over
D_α, D_α^z and D_α^η.
"""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from typing import Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from app.core.config import settings
from app.core.exceptions import (
    ConfigurationError, ContourOptError, DimensionMismatch, PipelineStageError,
)
from app.core.logging import stage_context
from app.models.dataset import DataSet
from app.models.program import ProblemTemplate
from app.models.reduction import ReductionOutcome
from app.models.solver import SolveResult, SolverOptions
from app.schemas.grid import GridCase
from app.schemas.opf import EtaSweepRow, OpfReport, OpfStageReport
from app.schemas.reduction import ReductionReport
from app.services import dda
from app.services.opf.matrices import build_matrices
from app.services.opf.template import build_template, uncertainty_stats
from app.services.reduction import reduce_dataset, thin

logger = logging.getLogger(__name__)

STAGE_ALPHA = "D_alpha"
STAGE_Z = "D_alpha_z"
STAGE_ETA = "D_alpha_eta"

_ORDER_TOL = 1e-6


@contextmanager
def _stage(name: str):
    with stage_context(name):
        try:
            yield
        except PipelineStageError:
            raise
        except (ContourOptError, ValueError, np.linalg.LinAlgError) as e:
            raise PipelineStageError(name, e) from e


class PipelineResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    report: OpfReport
    reduction: ReductionOutcome
    results: Dict[str, SolveResult]
    templates: Dict[str, ProblemTemplate]
    datasets: Dict[str, DataSet]


def default_b_bar(case: GridCase) -> int:
    """Number of decision variables of the case's d-OPF."""
    return 2 * case.n_gen + case.n_bus - 1


def check_data(case: GridCase, dataset: DataSet) -> None:
    if dataset.r1 != 0:
        raise ConfigurationError("OPF deviation data must be continuous (r1 = 0)")
    if dataset.r2 != case.n_renewable:
        raise DimensionMismatch(
            f"data has {dataset.r2} columns but case '{case.name}' has {case.n_renewable} renewables")


def reduction_report(outcome: ReductionOutcome, alpha: float, rho: float,
                     generated_at: Optional[str] = None) -> ReductionReport:
    sds = outcome.sds
    return ReductionReport(
        seed=outcome.seed, alpha=alpha, zeta=outcome.zeta, rho=rho, b_bar=outcome.plan.b_bar,
        D=outcome.source.size, D_alpha=outcome.plan.d_alpha, z=outcome.plan.z,
        varrho_bound=outcome.plan.bound,
        eta=float(sds.eta) if sds is not None and not isinstance(sds.eta, dict) else 0.0,
        z_eta=int(outcome.eta_indices.shape[0]),
        saturated=bool(sds.saturated) if sds is not None else False,
        weights=[int(w) for w in outcome.eta_weights],
        indices=[int(i) for i in outcome.z_indices],
        eta_indices=[int(i) for i in outcome.eta_indices],
        generated_at=generated_at,
    )


def _stage_templates(case: GridCase, datasets: Dict[str, DataSet], weights: Dict[str, np.ndarray],
                     mode: str) -> Dict[str, ProblemTemplate]:
    mats = build_matrices(case)
    if mode == "reference":
        shared = build_template(case, uncertainty_stats(datasets[STAGE_ALPHA]), mats)
        return {name: shared for name in datasets}
    return {name: build_template(case, uncertainty_stats(data, weights.get(name)), mats)
            for name, data in datasets.items()}


def _timed_solve(tmpl: ProblemTemplate, data: DataSet, options: Optional[SolverOptions]):
    start = time.perf_counter()
    result = dda.solve_template(tmpl, data, options)
    return result, time.perf_counter() - start


def _gap(objective: float, reference: float) -> float:
    return 100.0 * (reference - objective) / max(abs(reference), 1e-12)


def run_pipeline(case: GridCase, dataset: DataSet, alpha: float, rho: float, eta: float,
                 zeta="auto", seed: int = 0, b_bar: Optional[int] = None, stage: str = "full",
                 threads: Optional[int] = None, options: Optional[SolverOptions] = None,
                 stats_mode: Optional[str] = None, record_timings: bool = True,
                 generated_at: Optional[str] = None) -> PipelineResult:
    """
    Reduce the data and solve the three d-OPF programs.

    Args:
        stage: "full", or "z-only" to skip SDS (the η row is then omitted)
        stats_mode: "reference" shares the D_α statistics across the three
            programs; "per_stage" uses each data set's own (weighted) statistics

    Raises:
        PipelineStageError: wraps the failing stage's error (exit code kept)
    """
    if stage not in ("full", "z-only"):
        raise ConfigurationError(f"unknown stage '{stage}' (expected 'full' or 'z-only')")
    mode = stats_mode or settings.OPF_STATS_MODE
    if mode not in ("reference", "per_stage"):
        raise ConfigurationError(f"unknown statistics mode '{mode}'")
    threads = threads or settings.THREADS
    b_bar = b_bar or default_b_bar(case)

    with _stage("validate"):
        check_data(case, dataset)
    with _stage("reduce"):
        outcome = reduce_dataset(dataset, alpha, rho, eta, b_bar, seed, zeta=zeta,
                                 thin_points=stage == "full")

    datasets = {STAGE_ALPHA: outcome.filtered, STAGE_Z: outcome.sampled}
    weights = {}
    if stage == "full":
        datasets[STAGE_ETA] = outcome.thinned
        weights[STAGE_ETA] = outcome.eta_weights
    with _stage("template"):
        templates = _stage_templates(case, datasets, weights, mode)

    with _stage("solve"):
        names = list(datasets)
        jobs = [(templates[k], datasets[k]) for k in names]
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                solved = list(pool.map(lambda job: _timed_solve(job[0], job[1], options), jobs))
        else:
            solved = [_timed_solve(t, d, options) for t, d in jobs]
    results = {k: res for k, (res, _) in zip(names, solved)}
    timings = {k: t for k, (_, t) in zip(names, solved)}

    reference = results[STAGE_ALPHA].objective
    m = templates[STAGE_ALPHA].m
    rows = []
    for k in names:
        tmpl, data, res = templates[k], datasets[k], results[k]
        base_rows = int(tmpl.E.shape[0] + tmpl.G_base.shape[0])
        generated = data.size * m
        rows.append(OpfStageReport(
            stage=k, data_points=data.size, constraint_rows=generated + base_rows,
            generated_rows=generated, base_rows=base_rows, status=res.status.value,
            objective=res.objective, gap_percent=None if k == STAGE_ALPHA else _gap(res.objective, reference),
            iterations=res.iterations, wall_time_s=timings[k] if record_timings else None,
        ))
        logger.info(f"{k}: {data.size} points, {generated + base_rows} rows, objective {res.objective:.4f}")

    objectives = [results[k].objective for k in reversed(names)]
    ordering = all(a <= b + _ORDER_TOL * max(1.0, abs(b)) for a, b in zip(objectives, objectives[1:]))
    if not ordering:
        logger.warning(f"Objective ordering violated: {objectives}")

    report = OpfReport(
        case=case.name, n=templates[STAGE_ALPHA].n, m=m, stats_mode=mode, stages=rows,
        reduction=reduction_report(outcome, alpha, rho, generated_at), ordering_holds=ordering,
        generated_at=generated_at,
    )
    return PipelineResult(report=report, reduction=outcome, results=results,
                          templates=templates, datasets=datasets)


def eta_sweep(case: GridCase, dataset: DataSet, alpha: float, rho: float, etas: Sequence[float],
              zeta="auto", seed: int = 0, b_bar: Optional[int] = None,
              options: Optional[SolverOptions] = None, stats_mode: Optional[str] = None) -> List[EtaSweepRow]:
    """
    Objective and z_η as functions of η over one fixed z-subsample; the gap is
    measured against the D_α optimum.
    """
    mode = stats_mode or settings.OPF_STATS_MODE
    b_bar = b_bar or default_b_bar(case)
    with _stage("validate"):
        check_data(case, dataset)
    with _stage("reduce"):
        outcome = reduce_dataset(dataset, alpha, rho, 0.0, b_bar, seed, zeta=zeta, thin_points=False)
    mats = build_matrices(case)
    with _stage("solve"):
        reference_tmpl = build_template(case, uncertainty_stats(outcome.filtered), mats)
        reference = dda.solve_template(reference_tmpl, outcome.filtered, options).objective
        rows = []
        for eta in etas:
            sds = thin(outcome.sampled, eta, seed=seed + 1)
            tmpl = reference_tmpl if mode == "reference" else build_template(
                case, uncertainty_stats(sds.points, sds.weights), mats)
            objective = dda.solve_template(tmpl, sds.points, options).objective
            rows.append(EtaSweepRow(eta=float(eta), z_eta=sds.z_eta, objective=objective,
                                    gap_percent=_gap(objective, reference)))
            logger.info(f"eta={eta}: z_eta={sds.z_eta}, objective {objective:.4f}")
    return rows

"""
Ready-made experiment configurations on the synthetic instances.
"""
import logging
import math
from typing import List, Optional, Sequence

import numpy as np

from app.core.exceptions import ContourOptError
from app.models.dataset import DataSet
from app.models.solver import SolverOptions
from app.schemas.analysis import OmegaReport, PhiEstimate, PhiReport, ScalingReport, ScenarioReport, VarrhoReport
from app.services import dda
from app.services.analysis import instances
from app.services.analysis.omega import verify_omega_monotone
from app.services.analysis.scaling import z_eta_scaling
from app.services.analysis.scenario import compare_scenario_method
from app.services.analysis.sensitivity import compute_sensitivity, estimate_phi_bound
from app.services.analysis.varrho import verify_varrho_sweep

logger = logging.getLogger(__name__)

PLANTED_D = 1000
PLANTED_ALPHA = 0.05
PLANTED_D_ALPHA = 500
SCENARIO_ZETA = 0.5


def varrho_experiment(trials: int, seed: int, b_bar: int = 1, zs: Optional[Sequence[int]] = None,
                      threads: Optional[int] = None, options: Optional[SolverOptions] = None) -> VarrhoReport:
    """Planted one-point LP (D=1000, α=0.05, D_α=500, 50 copies) over a 10-point z sweep."""
    multiplicity = int(math.floor(PLANTED_ALPHA * PLANTED_D + 1e-9))
    tmpl, data = instances.planted_floor_instance(PLANTED_D_ALPHA, multiplicity, seed=seed)
    if zs is None:
        zs = sorted(set(int(round(v)) for v in np.linspace(1, 60, 10)))
    return verify_varrho_sweep(tmpl, data, PLANTED_ALPHA, PLANTED_D, zs, b_bar, trials, seed,
                               threads=threads, options=options)


def phi_experiment(etas: Sequence[float], instance_count: int, seed: int, size: int = 200,
                   second_order: bool = False, options: Optional[SolverOptions] = None) -> PhiReport:
    """Corner LP on ``instance_count`` seeded discs of row coefficients, every η per instance."""
    tmpl = instances.corner_template()
    estimates: List[PhiEstimate] = []
    for k in range(instance_count):
        data = instances.corner_cloud(size, seed=seed + k)
        try:
            optimum = dda.solve_template(tmpl, data, options)
            boundary = dda.find_boundary_points(tmpl, data, optimum, options=options)
            sens = compute_sensitivity(tmpl, data, optimum, boundary, second_order=second_order)
        except ContourOptError as e:
            logger.warning(f"phi instance {k} skipped: {e}")
            continue
        estimates.extend(estimate_phi_bound(tmpl, data, optimum, boundary, eta, seed=seed + k,
                                            options=options, sensitivity=sens) for eta in etas)
    return PhiReport(estimates=estimates, respected_count=sum(1 for e in estimates if e.respected),
                     instances=len(estimates))


def omega_experiment(etas: Sequence[float], trials: int, seed: int, size: int = 400, z: int = 100,
                     threads: Optional[int] = None, options: Optional[SolverOptions] = None) -> OmegaReport:
    data = instances.corner_cloud(size, seed=seed)
    return verify_omega_monotone(instances.corner_template(), data, min(z, size), etas, trials, seed,
                                 threads=threads, options=options)


def scenario_experiment(alpha: float, trials: int, seed: int, zeta=SCENARIO_ZETA, probes: int = 1000,
                        threads: Optional[int] = None) -> List[ScenarioReport]:
    """Threshold LP under Student-t(2) noise, once with N = 1 and once with N = ⌈10/α⌉."""
    tmpl = instances.threshold_template()
    sampler = instances.heavy_tail_sampler(df=2.0)
    return [compare_scenario_method(tmpl, sampler, N, alpha, trials, seed, probes=probes, zeta=zeta,
                                    probe_low=-30.0, probe_high=5.0, threads=threads)
            for N in (1, int(math.ceil(10.0 / alpha)))]


def scaling_experiment(etas: Sequence[float], seeds: int, seed: int, points: Optional[DataSet] = None,
                       size: int = 5000) -> ScalingReport:
    """Uniform unit square unless ``points`` is given."""
    if points is None:
        rng = np.random.default_rng(seed)
        points = DataSet.from_arrays(real_part=rng.uniform(0.0, 1.0, size=(size, 2)), name="unit-square")
    return z_eta_scaling(points, etas, seeds=seeds, seed=seed)

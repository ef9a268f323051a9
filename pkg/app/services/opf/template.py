"""
d-OPF with affine recourse as a D-DA problem template.

Decision vector x = (p^G, θ without the reference bus, λ), all per-unit on the
case base. For a deviation ξ (centered by the data mean, s = eᵀξ) the
generators absorb the imbalance through p^G − sλ and the angles move by
Δθ = B̆(A s λ − C ξ).
"""
import logging
from typing import Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from app.core.exceptions import ConfigurationError, DimensionMismatch
from app.models.dataset import DataSet
from app.models.grid import DcMatrices, OpfDecision
from app.models.program import AffineRowGenerator, ProblemTemplate
from app.schemas.grid import GridCase
from app.services.opf.matrices import build_matrices

logger = logging.getLogger(__name__)


class UncertaintyStats(BaseModel):
    """Weighted mean of ξ and weighted variance of the centered total deviation."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    mean: np.ndarray
    variance: float
    total_weight: float


def uncertainty_stats(data: DataSet, weights: Optional[np.ndarray] = None) -> UncertaintyStats:
    """
    Args:
        data: deviations in per-unit, r1 = 0
        weights: optional non-negative multiplicities (ball sizes after SDS)
    """
    if data.size == 0:
        raise ConfigurationError("cannot compute statistics of an empty data set")
    xi = data.vectors
    w = np.ones(data.size) if weights is None else np.asarray(weights, dtype=float)
    if w.shape[0] != data.size or np.any(w < 0) or w.sum() <= 0:
        raise ConfigurationError("weights must be non-negative, one per point, with a positive sum")
    total = float(w.sum())
    mean = (w[:, None] * xi).sum(axis=0) / total
    s = (xi - mean).sum(axis=1)
    variance = float((w * s ** 2).sum() / total)
    return UncertaintyStats(mean=mean, variance=variance, total_weight=total)


def _layout(g: int, nb: int) -> Dict[str, Tuple[int, int]]:
    return {"p_gen": (0, g), "theta": (g, g + nb - 1), "participation": (g + nb - 1, 2 * g + nb - 1)}


def build_template(case: GridCase, stats: UncertaintyStats,
                   matrices: Optional[DcMatrices] = None) -> ProblemTemplate:
    """
    Assemble the d-OPF template of a case for one set of data statistics.

    Objective: Σ (c2 p² + c1 p + c0) + V̂ Σ c2 λ², in $ with p in per-unit.
    Base rows: nodal balance B θ = A p^G + C p^R + d (with p^R shifted by the
    data mean) and Σλ = 1. Per point: two rows per branch and two per generator.

    Raises:
        DimensionMismatch: statistics dimension differs from the renewable count
    """
    r = case.n_renewable
    if r < 1:
        raise ConfigurationError(f"case '{case.name}' has no renewables; nothing is uncertain")
    if stats.mean.shape[0] != r:
        raise DimensionMismatch(f"data has {stats.mean.shape[0]} columns but case '{case.name}' has {r} renewables")
    mats = matrices or build_matrices(case)
    base = case.base_mva
    g, nb, n_br = case.n_gen, case.n_bus, len(case.branches)
    n = 2 * g + nb - 1
    layout = _layout(g, nb)
    pg, th, lam = (slice(*layout[k]) for k in ("p_gen", "theta", "participation"))

    p_min = np.array([gen.p_min_mw for gen in case.generators]) / base
    p_max = np.array([gen.p_max_mw for gen in case.generators]) / base
    c2 = np.array([gen.cost_c2 for gen in case.generators]) * base ** 2
    c1 = np.array([gen.cost_c1 for gen in case.generators]) * base
    c0 = float(sum(gen.cost_c0 for gen in case.generators))
    demand = -np.array([bus.demand_mw for bus in case.buses]) / base
    p_ren = np.array([ren.forecast_mw for ren in case.renewables]) / base + stats.mean
    limits = np.array([br.limit_mw for br in case.branches]) / base

    keep = mats.non_reference
    select = np.zeros((nb, nb - 1))
    select[keep, np.arange(nb - 1)] = 1.0
    F_theta = mats.branch_flow @ select
    F_lam = mats.branch_flow @ mats.B_breve @ mats.A
    F_xi = mats.branch_flow @ mats.B_breve @ mats.C

    Q = np.zeros((n, n))
    Q[pg, pg] = np.diag(2.0 * c2)
    Q[lam, lam] = np.diag(2.0 * c2 * stats.variance)
    c = np.zeros(n)
    c[pg] = c1

    E = np.zeros((nb + 1, n))
    E[:nb, pg] = -mats.A
    E[:nb, th] = mats.B @ select
    E[nb, lam] = 1.0
    b = np.concatenate([mats.C @ p_ren + demand, [1.0]])

    lb = np.full(n, -np.inf)
    ub = np.full(n, np.inf)
    lb[pg], ub[pg] = p_min, p_max
    lb[lam], ub[lam] = 0.0, 1.0

    # rows: flow+, flow−, generator upper, generator lower
    m = 2 * n_br + 2 * g
    G0 = np.zeros((m, n))
    G1 = np.zeros((m, n))
    eye = np.eye(g)
    G0[:n_br, th] = F_theta
    G0[n_br:2 * n_br, th] = -F_theta
    G0[2 * n_br:2 * n_br + g, pg] = eye
    G0[2 * n_br + g:, pg] = -eye
    G1[:n_br, lam] = -F_lam
    G1[n_br:2 * n_br, lam] = F_lam
    G1[2 * n_br:2 * n_br + g, lam] = -eye
    G1[2 * n_br + g:, lam] = eye
    h0 = np.concatenate([limits, limits, p_max, -p_min])
    H = np.zeros((m, r))
    H[:n_br] = -F_xi
    H[n_br:2 * n_br] = F_xi

    generator = AffineRowGenerator(G0, [G1] * r, h0, H, center=stats.mean)
    bus_ids = [bus.id for bus in case.buses]
    names = ([f"pg{k + 1}" for k in range(g)]
             + [f"theta{bus_ids[k]}" for k in keep]
             + [f"lambda{k + 1}" for k in range(g)])
    logger.debug(f"d-OPF template for '{case.name}': n={n}, m={m}, V={stats.variance:.6e}")
    return ProblemTemplate(
        Q=Q, c=c, c0=c0, generator=generator, E=E, b=b, lb=lb, ub=ub,
        point_dims=(0, r), variable_names=names,
        metadata={
            "case": case.name, "base_mva": base, "layout": layout, "matrices": mats,
            "stats": stats, "cost_c2_pu": c2, "p_renewable": p_ren, "demand": demand,
            "limits": limits, "p_min": p_min, "p_max": p_max,
        },
    )


def _split(tmpl: ProblemTemplate, x: np.ndarray):
    layout = tmpl.metadata["layout"]
    return tuple(np.asarray(x)[slice(*layout[k])] for k in ("p_gen", "theta", "participation"))


def full_angles(tmpl: ProblemTemplate, theta_non_ref: np.ndarray) -> np.ndarray:
    mats: DcMatrices = tmpl.metadata["matrices"]
    theta = np.zeros(mats.B.shape[0])
    theta[mats.non_reference] = theta_non_ref
    return theta


def uncertainty_cost(tmpl: ProblemTemplate, participation: np.ndarray) -> float:
    """Expected recourse cost V̂ Σ c2 λ² in $."""
    stats: UncertaintyStats = tmpl.metadata["stats"]
    return float(stats.variance * np.sum(tmpl.metadata["cost_c2_pu"] * np.asarray(participation) ** 2))


def decode_decision(tmpl: ProblemTemplate, x: np.ndarray) -> OpfDecision:
    p_gen, theta, lam = _split(tmpl, x)
    return OpfDecision(
        p_gen_mw=p_gen * tmpl.metadata["base_mva"],
        theta=full_angles(tmpl, theta),
        participation=lam,
        objective=tmpl.objective(np.asarray(x, dtype=float)),
    )


def angle_shift(mats: DcMatrices, participation: np.ndarray, xi_centered: np.ndarray) -> np.ndarray:
    """Δθ = B̆(A s λ − C ξ) with s = eᵀξ."""
    s = float(np.sum(xi_centered))
    return mats.B_breve @ (mats.A @ (s * participation) - mats.C @ xi_centered)


def balance_residual(tmpl: ProblemTemplate, x: np.ndarray) -> float:
    """‖B θ − A p^G − C p^R − d‖∞ at the forecast point."""
    mats: DcMatrices = tmpl.metadata["matrices"]
    p_gen, theta, _ = _split(tmpl, x)
    theta = full_angles(tmpl, theta)
    residual = mats.B @ theta - mats.A @ p_gen - mats.C @ tmpl.metadata["p_renewable"] - tmpl.metadata["demand"]
    return float(np.max(np.abs(residual)))


def realtime_balance_residual(tmpl: ProblemTemplate, x: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """
    B(θ − Δθ) − [A(p^G − sλ) + C(p^R + ξ) + d] for a raw deviation ξ.
    Vanishes whenever the forecast balance holds and Σλ = 1.
    """
    mats: DcMatrices = tmpl.metadata["matrices"]
    stats: UncertaintyStats = tmpl.metadata["stats"]
    p_gen, theta, lam = _split(tmpl, x)
    theta = full_angles(tmpl, theta)
    xc = np.asarray(xi, dtype=float) - stats.mean
    s = float(np.sum(xc))
    lhs = mats.B @ (theta - angle_shift(mats, lam, xc))
    rhs = mats.A @ (p_gen - s * lam) + mats.C @ (tmpl.metadata["p_renewable"] + xc) + tmpl.metadata["demand"]
    return lhs - rhs


def replay_feasibility(tmpl: ProblemTemplate, x: np.ndarray, data: DataSet,
                       tol: float = 1e-6) -> Tuple[bool, float]:
    """
    Simulate the real-time dispatch for every data point and check generator
    bounds and line limits directly on the network quantities.

    Returns:
        (all within tol, worst violation in per-unit)
    """
    mats: DcMatrices = tmpl.metadata["matrices"]
    stats: UncertaintyStats = tmpl.metadata["stats"]
    p_gen, theta, lam = _split(tmpl, x)
    theta = full_angles(tmpl, theta)
    worst = 0.0
    for xi in data.vectors:
        xc = xi - stats.mean
        s = float(np.sum(xc))
        flows = mats.branch_flow @ (theta - angle_shift(mats, lam, xc))
        dispatch = p_gen - s * lam
        worst = max(worst,
                    float(np.max(np.abs(flows) - tmpl.metadata["limits"])),
                    float(np.max(dispatch - tmpl.metadata["p_max"])),
                    float(np.max(tmpl.metadata["p_min"] - dispatch)))
    return worst <= tol, worst

"""
Sample sizing from the hypergeometric bound and strategic data selection (SDS).
"""
import logging
import math
from fractions import Fraction
from typing import Dict, Optional, Tuple, Union

import numpy as np
from scipy.spatial import cKDTree

from app.core.exceptions import ConfigurationError, InfeasibleSamplingPlan
from app.models.dataset import DataSet
from app.models.density import AlphaFilterResult
from app.models.reduction import ReductionOutcome, SamplingPlan, SdsResult
from app.services.density import filter_dataset

logger = logging.getLogger(__name__)


def _comb(a: int, b: int) -> int:
    if a < 0 or b < 0 or a < b:
        return 0
    return math.comb(a, b)


def deficit(alpha: float, source_size: int) -> int:
    """⌊α·D⌋, guarded against representation error (0.29·100 -> 29, not 28)."""
    return int(math.floor(alpha * source_size + 1e-9))


def varrho_lower_bound(z: int, b_bar: int, alpha: float, source_size: int, d_alpha: int) -> float:
    """
    Lower bound on the probability that a uniform z-subsample of the filtered
    set keeps every boundary-forming point:

        1 + Σ_{k=1..B̄} (−1)^k C(B̄,k) C(D_α − k⌊αD⌋, z) / C(D_α, z)

    clamped to [0, 1]. Exact rational arithmetic on big integers.
    """
    if b_bar < 1:
        raise ConfigurationError("b_bar must be >= 1")
    if not 1 <= z <= d_alpha:
        raise ConfigurationError(f"z must lie in [1, D_alpha={d_alpha}], got {z}")
    if alpha * source_size > d_alpha + 1e-9:
        raise ConfigurationError("alpha*D exceeds D_alpha")
    step = deficit(alpha, source_size)
    total = _comb(d_alpha, z)
    acc = 0
    for k in range(1, b_bar + 1):
        term = math.comb(b_bar, k) * _comb(d_alpha - k * step, z)
        if term == 0:
            break
        acc += -term if k % 2 else term
    value = float(1 + Fraction(acc, total))
    return min(1.0, max(0.0, value))


def plan_sample_size(rho: float, b_bar: int, alpha: float, source_size: int, d_alpha: int) -> SamplingPlan:
    """
    Smallest z with ϱ̲(z) >= ρ (binary search; the bound is nondecreasing in z).

    Raises:
        InfeasibleSamplingPlan: even z = D_α misses ρ
    """
    if not 0.0 <= rho < 1.0:
        raise ConfigurationError(f"rho must lie in [0, 1), got {rho}")
    if d_alpha < 1:
        raise InfeasibleSamplingPlan("filtered set is empty; nothing to sample")

    def bound(z):
        return varrho_lower_bound(z, b_bar, alpha, source_size, d_alpha)

    top = bound(d_alpha)
    if top < rho:
        raise InfeasibleSamplingPlan(
            f"varrho bound at z=D_alpha={d_alpha} is {top:.6f} < rho={rho}")
    lo, hi = 1, d_alpha
    while lo < hi:
        mid = (lo + hi) // 2
        if bound(mid) >= rho:
            hi = mid
        else:
            lo = mid + 1
    plan = SamplingPlan(rho=rho, b_bar=b_bar, alpha=alpha, source_size=source_size,
                        d_alpha=d_alpha, z=lo, bound=bound(lo))
    logger.info(f"Sampling plan: z={plan.z} of D_alpha={d_alpha} (bound {plan.bound:.4f} >= rho {rho})")
    return plan


def draw_subsample(filtered: AlphaFilterResult, plan: SamplingPlan, seed: int) -> np.ndarray:
    """
    Uniform z-subset of the filtered points, without replacement.

    Returns:
        Sorted positions into the source data set.
    """
    if plan.z > filtered.d_alpha:
        raise ConfigurationError(f"z={plan.z} exceeds D_alpha={filtered.d_alpha}")
    rng = np.random.default_rng(seed)
    picks = rng.choice(filtered.d_alpha, size=plan.z, replace=False)
    return np.sort(filtered.kept_indices[picks])


def scenario_sample_size(n: int, epsilon: float, beta: float) -> int:
    """Scenario-method sample size ⌈e(n − ln ε) / (β(e − 1))⌉."""
    if not (0 < epsilon < 1 and 0 < beta < 1):
        raise ConfigurationError("epsilon and beta must lie in (0, 1)")
    e = math.e
    return int(math.ceil(e * (n - math.log(epsilon)) / (beta * (e - 1.0))))


def _greedy_separation(real: np.ndarray, eta: float, rng: np.random.Generator):
    """
    Randomized greedy 2η-separated selection over one group.

    Candidates are scanned in a random permutation; a candidate is accepted
    when no survivor lies strictly closer than 2η, then every still-free point
    within η of it is discarded into its ball. Points left over (between η and
    2η of a survivor) are assigned to their nearest survivor.

    Returns:
        (survivor positions in pick order, owner slot of every point)
    """
    size = real.shape[0]
    owner = np.full(size, -1, dtype=np.int64)
    if size == 0:
        return np.zeros(0, dtype=np.int64), owner
    tree = cKDTree(real)
    survivors = []
    is_survivor = np.zeros(size, dtype=bool)
    rejected = np.zeros(size, dtype=bool)
    for idx in rng.permutation(size):
        if owner[idx] >= 0 or rejected[idx]:
            continue
        near = np.asarray(tree.query_ball_point(real[idx], r=2.0 * eta), dtype=np.int64)
        near = near[is_survivor[near]]
        if near.size and np.any(np.linalg.norm(real[near] - real[idx], axis=1) < 2.0 * eta):
            rejected[idx] = True
            continue
        slot = len(survivors)
        survivors.append(idx)
        is_survivor[idx] = True
        ball = np.asarray(tree.query_ball_point(real[idx], r=eta), dtype=np.int64)
        ball = ball[owner[ball] < 0]
        owner[ball] = slot
        owner[idx] = slot

    survivors = np.asarray(survivors, dtype=np.int64)
    leftover = np.flatnonzero(owner < 0)
    if leftover.size:
        _, nearest = cKDTree(real[survivors]).query(real[leftover], k=1)
        owner[leftover] = np.asarray(nearest, dtype=np.int64).ravel()
    return survivors, owner


def _finish(selected: np.ndarray, owner_global: np.ndarray, eta, points: DataSet) -> SdsResult:
    selected = np.sort(selected)
    slot_of = np.full(points.size, -1, dtype=np.int64)
    slot_of[selected] = np.arange(selected.size)
    assignment = slot_of[owner_global]
    weights = np.bincount(assignment, minlength=selected.size).astype(np.int64)
    return SdsResult(
        selected=selected, weights=weights, assignment=assignment, eta=eta,
        input_size=points.size, saturated=selected.size == 1 and points.size > 1,
        points=points.take(selected),
    )


def sds_continuous(points: DataSet, eta: float, seed: Optional[int] = None,
                   rng: Optional[np.random.Generator] = None) -> SdsResult:
    """
    Thin continuous data so that survivors are pairwise at least 2η apart.

    Args:
        points: input subset (r1 = 0)
        eta: radius, > 0
        seed: RNG seed (ignored when ``rng`` is given)

    Returns:
        SdsResult; ``saturated`` is set when a single survivor remains
    """
    if points.r1 != 0:
        raise ConfigurationError("sds_continuous expects purely continuous data (r1 = 0)")
    if eta <= 0:
        raise ConfigurationError(f"eta must be > 0, got {eta}")
    rng = rng or np.random.default_rng(seed)
    survivors, owner = _greedy_separation(points.real_part, eta, rng)
    result = _finish(survivors, survivors[owner] if survivors.size else owner, float(eta), points)
    logger.info(f"SDS eta={eta}: kept {result.z_eta} of {points.size} points")
    return result


def sds_mixed(points: DataSet, eta: Union[float, Dict[Tuple[int, ...], float]],
              seed: Optional[int] = None) -> SdsResult:
    """
    Partition by exact integer part and thin every group with its own radius.

    ``eta`` may be a single radius or a mapping from integer-part tuples to
    radii (missing groups use the ``None`` key or, failing that, the smallest
    radius given). Pure-integer data returns one representative per group.
    """
    if points.r1 < 1:
        raise ConfigurationError("sds_mixed expects at least one integer column")
    if points.size == 0:
        return _finish(np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), eta, points)

    keys, inverse = np.unique(points.integer_part, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).ravel()
    rng = np.random.default_rng(seed)
    selected, owner_global = [], np.full(points.size, -1, dtype=np.int64)
    radii = {}
    for g, key in enumerate(keys):
        key_t = tuple(int(v) for v in key)
        if isinstance(eta, dict):
            radius = eta.get(key_t, eta.get(None, min(v for v in eta.values())))
        else:
            radius = eta
        if radius is None or radius <= 0:
            raise ConfigurationError(f"eta for group {key_t} must be > 0")
        radii[key_t] = float(radius)
        members = np.flatnonzero(inverse == g)
        if points.r2 == 0:
            local_survivors = np.array([rng.permutation(members.size)[0]])
            local_owner = np.zeros(members.size, dtype=np.int64)
        else:
            local_survivors, local_owner = _greedy_separation(points.real_part[members], radius, rng)
        global_survivors = members[local_survivors]
        owner_global[members] = global_survivors[local_owner]
        selected.extend(global_survivors.tolist())

    eta_out = radii if isinstance(eta, dict) else float(eta)
    result = _finish(np.asarray(selected, dtype=np.int64), owner_global, eta_out, points)
    logger.info(f"SDS mixed over {keys.shape[0]} groups: kept {result.z_eta} of {points.size} points")
    return result


def thin(points: DataSet, eta, seed: Optional[int] = None) -> SdsResult:
    """Dispatch to the continuous or mixed procedure; η = 0 keeps every point."""
    if not isinstance(eta, dict) and eta == 0:
        everything = np.arange(points.size)
        return SdsResult(selected=everything, weights=np.ones(points.size, dtype=np.int64),
                         assignment=everything, eta=0.0, input_size=points.size,
                         saturated=False, points=points)
    if points.r1 == 0:
        if isinstance(eta, dict):
            raise ConfigurationError("per-group radii require integer columns")
        return sds_continuous(points, float(eta), seed=seed)
    return sds_mixed(points, eta, seed=seed)


def reduce_dataset(ds: DataSet, alpha: float, rho: float, eta, b_bar: int, seed: int,
                   zeta="auto", thin_points: bool = True) -> ReductionOutcome:
    """
    Full data reduction: α-process, sample-size plan, uniform z-subsample and
    (unless ``thin_points`` is False) SDS. The subsample uses ``seed``, SDS
    ``seed + 1``.
    """
    filtered, automatic = filter_dataset(ds, alpha, zeta)
    plan = plan_sample_size(rho, b_bar, alpha, ds.size, filtered.d_alpha)
    z_indices = draw_subsample(filtered, plan, seed)
    sds = thin(ds.take(z_indices), eta, seed=seed + 1) if thin_points else None
    return ReductionOutcome(
        source=ds, zeta=filtered.bandwidth, zeta_auto=automatic, kept_indices=filtered.kept_indices,
        plan=plan, z_indices=z_indices, sds=sds, seed=seed,
    )

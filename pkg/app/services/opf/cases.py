"""
Grid case loading (bundled or from a JSON file), synthetic cases and
synthetic renewable-deviation data.
"""
import json
import logging
import os
from typing import List, Optional

import numpy as np
from pydantic import ValidationError

from app.core.exceptions import CaseValidationError, ConfigurationError, format_validation_error
from app.models.dataset import DataSet
from app.schemas.grid import BranchSpec, BusSpec, GeneratorSpec, GridCase, RenewableSpec

logger = logging.getLogger(__name__)

_CASE_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'config', 'cases')

# bundled cases produced on the fly: name -> synthetic_case kwargs
_SYNTHETIC_CASES = {
    "case39": dict(n_bus=39, n_gen=10, n_renewable=2, seed=39),
    "case118": dict(n_bus=118, n_gen=54, n_renewable=10, seed=118),
}


def available_cases() -> List[str]:
    files = [os.path.splitext(f)[0] for f in os.listdir(_CASE_DIR) if f.endswith('.json')]
    return sorted(set(files) | set(_SYNTHETIC_CASES))


def _validate(payload, source: str) -> GridCase:
    try:
        return GridCase.model_validate(payload)
    except ValidationError as e:
        raise CaseValidationError(f"{source}: {format_validation_error(e)}")


def load_case(name_or_path: str) -> GridCase:
    """
    Load a bundled case by name (``case6``, ``case39``, ``case118``) or a case JSON file.

    Raises:
        ConfigurationError: neither a bundled name nor an existing file
        CaseValidationError: the JSON does not match the case schema
    """
    if name_or_path in _SYNTHETIC_CASES:
        return synthetic_case(name=name_or_path, **_SYNTHETIC_CASES[name_or_path])

    path = name_or_path
    if not os.path.isfile(path):
        bundled = os.path.join(_CASE_DIR, f"{name_or_path}.json")
        if not os.path.isfile(bundled):
            raise ConfigurationError(
                f"case not found: {name_or_path} (bundled cases: {', '.join(available_cases())})")
        path = bundled

    with open(path, 'r', encoding='utf-8') as f:
        try:
            payload = json.load(f)
        except json.JSONDecodeError as e:
            raise CaseValidationError(f"{path}: invalid JSON ({e})")
    case = _validate(payload, path)
    logger.info(f"Loaded case '{case.name}': {case.n_bus} buses, {len(case.branches)} branches, "
                f"{case.n_gen} generators, {case.n_renewable} renewables")
    return case


def synthetic_case(n_bus: int = 39, n_gen: int = 10, n_renewable: int = 2, seed: int = 0,
                   name: Optional[str] = None) -> GridCase:
    """
    Random connected grid of a given size.

    A random spanning tree plus extra chords (about 1.2 branches per bus);
    loads on non-generator buses; generator capacity 1.6x the net load with
    p_min at 10 % of p_max; renewables forecast 5 % of total load each.
    Line limits equal total load plus forecast, so they never bind at the
    forecast point.
    """
    if n_bus < 2 or n_gen < 1 or n_gen > n_bus or n_renewable < 0:
        raise ConfigurationError("synthetic case needs n_bus >= 2 and 1 <= n_gen <= n_bus")
    rng = np.random.default_rng(seed)
    ids = list(range(1, n_bus + 1))

    edges = set()
    for k in range(1, n_bus):
        parent = int(rng.integers(0, k))
        edges.add((parent, k))
    target = max(n_bus - 1, int(round(1.2 * n_bus)))
    while len(edges) < target:
        i, j = sorted(int(v) for v in rng.choice(n_bus, size=2, replace=False))
        edges.add((i, j))

    gen_pos = np.sort(rng.choice(n_bus, size=n_gen, replace=False))
    load_pos = np.setdiff1d(np.arange(n_bus), gen_pos)
    if load_pos.size == 0:
        load_pos = np.arange(n_bus)
    demand = np.zeros(n_bus)
    demand[load_pos] = np.round(rng.uniform(50.0, 300.0, size=load_pos.size), 1)
    total_load = float(demand.sum())
    forecast = round(0.05 * total_load, 1)
    net_load = total_load - n_renewable * forecast

    shares = rng.dirichlet(np.ones(n_gen))
    p_max = np.round(1.6 * net_load * shares + 10.0, 1)
    limit = total_load + n_renewable * forecast

    ren_pos = rng.choice(load_pos, size=n_renewable, replace=n_renewable > load_pos.size)
    case = GridCase(
        name=name or f"synthetic{n_bus}",
        base_mva=100.0,
        reference_bus=ids[int(gen_pos[0])],
        buses=[BusSpec(id=ids[k], demand_mw=float(demand[k])) for k in range(n_bus)],
        branches=[BranchSpec(from_bus=ids[i], to_bus=ids[j],
                             susceptance=float(np.round(rng.uniform(5.0, 20.0), 3)), limit_mw=limit)
                  for i, j in sorted(edges)],
        generators=[GeneratorSpec(bus=ids[int(p)], p_min_mw=float(np.round(0.1 * p_max[k], 1)),
                                  p_max_mw=float(p_max[k]),
                                  cost_c2=float(np.round(rng.uniform(0.004, 0.01), 5)),
                                  cost_c1=float(np.round(rng.uniform(9.0, 13.0), 3)),
                                  cost_c0=float(np.round(rng.uniform(150.0, 250.0), 1)))
                    for k, p in enumerate(gen_pos)],
        renewables=[RenewableSpec(bus=ids[int(p)], forecast_mw=forecast) for p in ren_pos],
    )
    logger.debug(f"Synthetic case '{case.name}' built with seed {seed}")
    return case


def synthetic_deviations(size: int, r: int, seed: int, scale: float = 0.16,
                         correlation: float = 0.3, name: str = "synthetic") -> DataSet:
    """Correlated Gaussian renewable deviations in per-unit, one column per renewable."""
    if size < 1 or r < 1:
        raise ConfigurationError("synthetic deviations need size >= 1 and r >= 1")
    cov = np.full((r, r), correlation * scale ** 2)
    np.fill_diagonal(cov, scale ** 2)
    rng = np.random.default_rng(seed)
    real = rng.multivariate_normal(np.zeros(r), cov, size=size)
    return DataSet.from_arrays(real_part=real, name=name)

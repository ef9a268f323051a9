"""
Shared helpers for the verification experiments: per-trial random streams,
parallel trial execution and the bound verdict.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, TypeVar

import numpy as np

from app.core.config import settings
from app.core.exceptions import ConfigurationError

T = TypeVar("T")


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent stream per (seed, trial), whatever the scheduling order."""
    return np.random.default_rng([seed, trial])


def run_trials(fn: Callable[[int], T], trials: int, threads: Optional[int] = None) -> List[T]:
    threads = threads or settings.THREADS
    if threads <= 1 or trials <= 1:
        return [fn(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(trials)))


def binomial_sigma(p: float, trials: int) -> float:
    if trials <= 0:
        return 0.0
    p = min(1.0, max(0.0, p))
    return math.sqrt(p * (1.0 - p) / trials)


def bound_respected(observed: float, bound: float, trials: int) -> bool:
    """observed >= bound − 3σ(bound) − 1/(2·trials)."""
    return observed >= bound - 3.0 * binomial_sigma(bound, trials) - 0.5 / max(trials, 1)


def parse_sweep(text: str) -> List[float]:
    """'a:b:k' -> k evenly spaced values from a to b inclusive; 'v' -> [v]."""
    parts = text.split(":")
    if len(parts) == 1:
        try:
            return [float(parts[0])]
        except ValueError:
            raise ConfigurationError(f"not a number: '{text}'")
    if len(parts) != 3:
        raise ConfigurationError(f"sweep must look like 'start:stop:count', got '{text}'")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigurationError(f"sweep must look like 'start:stop:count', got '{text}'")
    if count < 1:
        raise ConfigurationError("sweep count must be >= 1")
    return [float(v) for v in np.linspace(start, stop, count)]

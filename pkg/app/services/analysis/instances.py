"""
Synthetic problem instances with known structure for the experiments.
"""
from typing import Tuple

import numpy as np

from app.models.dataset import DataSet
from app.models.program import AffineRowGenerator, ProblemTemplate


def threshold_template(lower: float = -100.0, upper: float = 100.0) -> ProblemTemplate:
    """min −x  s.t.  x <= ξ for every point; the optimum is the smallest ξ."""
    generator = AffineRowGenerator(G0=[[1.0]], G_coeffs=[np.zeros((1, 1))], h0=[0.0], H=[[1.0]])
    return ProblemTemplate(Q=np.zeros((1, 1)), c=np.array([-1.0]), generator=generator,
                           lb=np.array([lower]), ub=np.array([upper]), point_dims=(0, 1),
                           variable_names=["x"])


def floor_template(lower: float = -100.0, upper: float = 100.0) -> ProblemTemplate:
    """min x  s.t.  x >= ξ for every point; the optimum is the largest ξ."""
    generator = AffineRowGenerator(G0=[[-1.0]], G_coeffs=[np.zeros((1, 1))], h0=[0.0], H=[[-1.0]])
    return ProblemTemplate(Q=np.zeros((1, 1)), c=np.array([1.0]), generator=generator,
                           lb=np.array([lower]), ub=np.array([upper]), point_dims=(0, 1),
                           variable_names=["x"])


def planted_floor_instance(d_alpha: int = 500, multiplicity: int = 50, seed: int = 0,
                           peak: float = 1.0) -> Tuple[ProblemTemplate, DataSet]:
    """
    One boundary point ``peak`` repeated ``multiplicity`` times among
    ``d_alpha`` points; every other point lies strictly below 0.9·peak.
    """
    rng = np.random.default_rng(seed)
    rest = rng.uniform(0.0, 0.9 * peak, size=d_alpha - multiplicity)
    values = np.concatenate([np.full(multiplicity, peak), rest])
    values = values[rng.permutation(d_alpha)]
    return floor_template(), DataSet.from_arrays(real_part=values, name="planted")


def corner_template(r1: int = 0, box: float = 10.0) -> ProblemTemplate:
    """
    min −x1 − x2  s.t.  ξᵀx <= 1 for every point ξ in R²; the optimum is the
    intersection of two lines. With ``r1`` = 1 the first coordinate is an
    integer tag that does not enter the rows.
    """
    zero = np.zeros((1, 2))
    coeffs = [zero] * r1 + [np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])]
    generator = AffineRowGenerator(G0=zero, G_coeffs=coeffs, h0=[1.0], H=np.zeros((1, r1 + 2)))
    return ProblemTemplate(Q=np.zeros((2, 2)), c=np.array([-1.0, -1.0]), generator=generator,
                           lb=np.full(2, -box), ub=np.full(2, box), point_dims=(r1, 2),
                           variable_names=["x1", "x2"])


def planted_corner_instance(d_alpha: int = 400, multiplicity: int = 40, seed: int = 0
                            ) -> Tuple[ProblemTemplate, DataSet]:
    """
    Two distinct boundary points (0.5·e1 + 2·e2 and 2·e1 + 0.5·e2 as row
    coefficients, each repeated ``multiplicity`` times); both are needed for
    the optimum, so the true boundary count is 2.
    """
    rng = np.random.default_rng(seed)
    first = np.tile([[2.0, 0.5]], (multiplicity, 1))
    second = np.tile([[0.5, 2.0]], (multiplicity, 1))
    rest = rng.uniform(0.2, 0.45, size=(d_alpha - 2 * multiplicity, 2))
    points = np.vstack([first, second, rest])[rng.permutation(d_alpha)]
    return corner_template(), DataSet.from_arrays(real_part=points, name="planted-corner")


def corner_cloud(size: int = 200, seed: int = 0, center: float = 1.0, radius: float = 0.5,
                 r1: int = 0, groups: int = 3) -> DataSet:
    """Row coefficients uniform in a disc around (center, center); optional integer tags."""
    rng = np.random.default_rng(seed)
    angle = rng.uniform(0.0, 2.0 * np.pi, size=size)
    rad = radius * np.sqrt(rng.uniform(0.0, 1.0, size=size))
    real = np.column_stack([center + rad * np.cos(angle), center + rad * np.sin(angle)])
    ints = rng.integers(0, groups, size=(size, r1)) if r1 else None
    return DataSet.from_arrays(integer_part=ints, real_part=real, name="corner-cloud")


def integer_corner_data(size: int = 60, seed: int = 0, low: int = 1, high: int = 4) -> DataSet:
    """Pure-integer row coefficients in [low, high]²; many repeated points."""
    rng = np.random.default_rng(seed)
    return DataSet.from_arrays(integer_part=rng.integers(low, high + 1, size=(size, 2)), name="integer-corner")


def integer_corner_template(box: float = 10.0) -> ProblemTemplate:
    zero = np.zeros((1, 2))
    generator = AffineRowGenerator(G0=zero, G_coeffs=[np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])],
                                   h0=[1.0], H=np.zeros((1, 2)))
    return ProblemTemplate(Q=np.zeros((2, 2)), c=np.array([-1.0, -1.0]), generator=generator,
                           lb=np.full(2, -box), ub=np.full(2, box), point_dims=(2, 0),
                           variable_names=["x1", "x2"])


def heavy_tail_sampler(df: float = 2.0, loc: float = 0.0, scale: float = 1.0):
    """Student-t sampler ``f(rng, size) -> DataSet`` for one uncertain scalar."""
    def sample(rng: np.random.Generator, size: int) -> DataSet:
        return DataSet.from_arrays(real_part=loc + scale * rng.standard_t(df, size=size), name="student-t")
    return sample


def gaussian_sampler(mean=(0.0,), scale: float = 1.0):
    mean = np.asarray(mean, dtype=float)

    def sample(rng: np.random.Generator, size: int) -> DataSet:
        return DataSet.from_arrays(real_part=mean + scale * rng.standard_normal((size, mean.size)),
                                   name="gaussian")
    return sample

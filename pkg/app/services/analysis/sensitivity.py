"""
Accuracy of the thinned program's optimum through the implicit map
x = h(ξ_B) defined by the constraints active at the optimum.

At the z-sample optimum x*, the boundary rows (owned by boundary-forming
points) together with the base equalities, active base rows and active bounds
form a square system g̃(x, ξ_B) = 0. Its solution map is differentiated by
finite differences with respect to the real coordinates of the boundary
points, one copy of the coordinates per boundary row.
"""
import logging
import math
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.linalg import lu_factor, lu_solve

from app.core.config import settings
from app.core.exceptions import ConfigurationError, PreconditionError, SingularJacobianError
from app.models.dataset import DataSet
from app.models.program import BoundaryReport, ProblemTemplate
from app.models.solver import SolveResult, SolverOptions
from app.schemas.analysis import PhiEstimate, PhiReport
from app.services import dda
from app.services.reduction import thin

logger = logging.getLogger(__name__)

_CONDITION_LIMIT = 1e12
_NEWTON_MAX_ITER = 20


class ImplicitSystem:
    """The square active system g̃(x, ξ_B) = 0 at an optimum."""

    def __init__(self, tmpl: ProblemTemplate, data: DataSet, x_star: np.ndarray,
                 boundary: BoundaryReport, active_tol: Optional[float] = None):
        active_tol = settings.ACTIVE_TOL if active_tol is None else active_tol
        self.tmpl = tmpl
        self.x_star = np.asarray(x_star, dtype=float)
        n = tmpl.n
        n_base = tmpl.G_base.shape[0]
        m = tmpl.m
        prog = dda.assemble(tmpl, data)

        rows = np.asarray(boundary.boundary_rows, dtype=np.int64)
        self.owners = prog.provenance[rows]
        self.local_rows = rows - n_base - self.owners * m
        self.points = data.vectors[self.owners].copy()
        self.r1, self.r2 = data.r1, data.r2
        self.integer_keys = [tuple(int(v) for v in data.integer_part[k]) for k in self.owners]

        fixed, rhs = [tmpl.E], [tmpl.b]
        if n_base:
            slack = tmpl.h_base - tmpl.G_base @ self.x_star
            act = np.flatnonzero(np.abs(slack) <= active_tol * (1.0 + np.abs(tmpl.h_base)))
            fixed.append(tmpl.G_base[act])
            rhs.append(tmpl.h_base[act])
        eye = np.eye(n)
        for bound in (tmpl.lb, tmpl.ub):
            finite = np.isfinite(bound)
            at = finite & (np.abs(self.x_star - np.where(finite, bound, 0.0))
                           <= active_tol * (1.0 + np.abs(np.where(finite, bound, 0.0))))
            fixed.append(eye[at])
            rhs.append(bound[at])
        self.F = np.vstack([np.atleast_2d(f).reshape(-1, n) for f in fixed])
        self.f = np.concatenate([np.asarray(v, dtype=float).ravel() for v in rhs])

        count = self.b_c + self.F.shape[0]
        if count != n:
            raise PreconditionError(
                f"implicit system has {self.b_c} boundary rows and {self.F.shape[0]} fixed rows "
                f"({count} equations) for n={n} variables")

    @property
    def b_c(self) -> int:
        return int(self.owners.shape[0])

    @property
    def n_params(self) -> int:
        return self.b_c * self.r2

    def linear_system(self, points: np.ndarray):
        G_rows, h_rows = [], []
        for q in range(self.b_c):
            G, h = self.tmpl.generator.rows(points[q])
            G_rows.append(np.atleast_2d(np.asarray(G))[self.local_rows[q]])
            h_rows.append(np.asarray(h).ravel()[self.local_rows[q]])
        J = np.vstack(G_rows + [self.F]) if G_rows else self.F
        rhs = np.concatenate([np.asarray(h_rows, dtype=float), self.f])
        return J, rhs

    def condition_number(self) -> float:
        J, _ = self.linear_system(self.points)
        return float(np.linalg.cond(J))

    def solve(self, points: np.ndarray, x0: Optional[np.ndarray] = None) -> np.ndarray:
        """Newton iteration on g̃(x, points) = 0 starting from x* (or x0)."""
        x = (self.x_star if x0 is None else x0).copy()
        for _ in range(_NEWTON_MAX_ITER):
            J, rhs = self.linear_system(points)
            residual = J @ x - rhs
            if np.max(np.abs(residual), initial=0.0) <= 1e-13 * (1.0 + np.max(np.abs(rhs), initial=0.0)):
                break
            x = x - lu_solve(lu_factor(J), residual)
        return x

    def perturbed(self, base: np.ndarray, q: int, coord: int, step: float) -> np.ndarray:
        points = base.copy()
        points[q, self.r1 + coord] += step
        return points


def fd_jacobian(system: ImplicitSystem, delta: float, scheme: str = "central",
                base: Optional[np.ndarray] = None) -> np.ndarray:
    """
    n x (B_c·r2) Jacobian of the implicit map; column q·r2 + c is the
    derivative with respect to real coordinate c of boundary row q's point.
    """
    if scheme not in ("forward", "central"):
        raise ConfigurationError(f"unknown finite-difference scheme '{scheme}'")
    base = system.points if base is None else base
    x0 = system.solve(base)
    columns = []
    for q in range(system.b_c):
        for c in range(system.r2):
            plus = system.solve(system.perturbed(base, q, c, delta), x0)
            if scheme == "forward":
                columns.append((plus - x0) / delta)
            else:
                minus = system.solve(system.perturbed(base, q, c, -delta), x0)
                columns.append((plus - minus) / (2.0 * delta))
    if not columns:
        return np.zeros((system.tmpl.n, 0))
    return np.column_stack(columns)


def fd_hessian_norm(system: ImplicitSystem, delta: float) -> float:
    """Frobenius norm of the second-derivative tensor (central differences of the Jacobian)."""
    slices = []
    for q in range(system.b_c):
        for c in range(system.r2):
            upper = fd_jacobian(system, delta, "central", system.perturbed(system.points, q, c, delta))
            lower = fd_jacobian(system, delta, "central", system.perturbed(system.points, q, c, -delta))
            slices.append((upper - lower) / (2.0 * delta))
    if not slices:
        return 0.0
    return float(math.sqrt(sum(float(np.sum(s ** 2)) for s in slices)))


class Sensitivity(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    jacobian: np.ndarray
    jacobian_norm: float
    hessian_norm: Optional[float] = None
    condition_number: float
    x_norm: float
    integer_keys: List[tuple]


def default_delta(data: DataSet) -> float:
    scale = float(np.max(np.abs(data.real_part), initial=0.0)) if data.r2 else 0.0
    return 1e-5 * max(1.0, scale)


def compute_sensitivity(tmpl: ProblemTemplate, data: DataSet, optimum: SolveResult,
                        boundary: BoundaryReport, delta: Optional[float] = None,
                        scheme: str = "central", second_order: bool = False) -> Sensitivity:
    """
    Raises:
        PreconditionError: the active system is not square, or x* = 0
        SingularJacobianError: the active system is singular or ill-conditioned
    """
    system = ImplicitSystem(tmpl, data, optimum.x, boundary)
    condition = system.condition_number()
    if not np.isfinite(condition) or condition > _CONDITION_LIMIT:
        raise SingularJacobianError(f"active-constraint Jacobian is singular (condition number {condition:.3e})",
                                    condition_number=condition)
    x_norm = float(np.linalg.norm(optimum.x))
    if x_norm == 0.0:
        raise PreconditionError("relative accuracy is undefined at x* = 0")
    delta = delta or default_delta(data)
    H = fd_jacobian(system, delta, scheme)
    hessian = fd_hessian_norm(system, max(delta, 10.0 * default_delta(data))) if second_order else None
    logger.info(f"Sensitivity: B_c={system.b_c}, |H|={np.linalg.norm(H, 2) if H.size else 0.0:.4e}, "
                f"cond={condition:.3e}")
    return Sensitivity(jacobian=H, jacobian_norm=float(np.linalg.norm(H, 2)) if H.size else 0.0,
                       hessian_norm=hessian, condition_number=condition, x_norm=x_norm,
                       integer_keys=system.integer_keys)


def effective_radius(sens: Sensitivity, eta: Union[float, Dict]) -> float:
    """η̂ = 2·sqrt(Σ η_q²) over the boundary rows; 2·sqrt(B_c)·η for a single radius."""
    if isinstance(eta, dict):
        fallback = eta.get(None, min(v for v in eta.values()))
        radii = [eta.get(key, fallback) for key in sens.integer_keys]
    else:
        radii = [float(eta)] * len(sens.integer_keys)
    return 2.0 * math.sqrt(sum(r ** 2 for r in radii))


def phi_lower(sens: Sensitivity, eta: Union[float, Dict], second_order: bool = False) -> float:
    eta_hat = effective_radius(sens, eta)
    loss = sens.jacobian_norm * eta_hat
    if second_order and sens.hessian_norm is not None:
        loss += 0.5 * sens.hessian_norm * eta_hat ** 2
    return 1.0 - loss / sens.x_norm


def measured_phi(tmpl: ProblemTemplate, data: DataSet, optimum: SolveResult, eta,
                 seed: int, options: Optional[SolverOptions] = None) -> float:
    """1 − ‖x*(D_α^η) − x*(D_α^z)‖ / ‖x*(D_α^z)‖."""
    if not isinstance(eta, dict) and eta == 0:
        return 1.0
    sds = thin(data, eta, seed=seed)
    thinned = dda.solve_template(tmpl, sds.points, options)
    return 1.0 - float(np.linalg.norm(thinned.x - optimum.x)) / float(np.linalg.norm(optimum.x))


def estimate_phi_bound(tmpl: ProblemTemplate, data: DataSet, optimum: SolveResult,
                       boundary: BoundaryReport, eta: Union[float, Dict], delta: Optional[float] = None,
                       scheme: str = "central", second_order: bool = False, measure: bool = True,
                       seed: int = 0, options: Optional[SolverOptions] = None,
                       sensitivity: Optional[Sensitivity] = None) -> PhiEstimate:
    """
    First-order lower bound φ̲(η) = 1 − ‖H‖·η̂ / ‖x*‖ (plus the optional
    second-order term ½‖H'‖_F η̂²) and, when ``measure`` is set, the accuracy
    actually reached by thinning ``data`` with radius η.
    """
    sens = sensitivity or compute_sensitivity(tmpl, data, optimum, boundary, delta, scheme, second_order)
    lower = phi_lower(sens, eta)
    lower2 = phi_lower(sens, eta, second_order=True) if sens.hessian_norm is not None else None
    measured = measured_phi(tmpl, data, optimum, eta, seed, options) if measure else None
    eta_value = float(eta) if not isinstance(eta, dict) else float(max(eta.values()))
    return PhiEstimate(
        eta=eta_value, phi_lower=lower, phi_lower_second_order=lower2, phi_measured=measured,
        jacobian_norm=sens.jacobian_norm, hessian_norm=sens.hessian_norm,
        condition_number=sens.condition_number, eta_hat=effective_radius(sens, eta),
        respected=None if measured is None else measured >= lower - 1e-9,
    )


def phi_sweep(tmpl: ProblemTemplate, data: DataSet, etas: Sequence[float], seed: int = 0,
              delta: Optional[float] = None, scheme: str = "central", second_order: bool = False,
              options: Optional[SolverOptions] = None) -> PhiReport:
    """Solve D-DA(data), find its boundary once and estimate φ at every η."""
    optimum = dda.solve_template(tmpl, data, options)
    boundary = dda.find_boundary_points(tmpl, data, optimum, options=options)
    sens = compute_sensitivity(tmpl, data, optimum, boundary, delta, scheme, second_order)
    estimates = [estimate_phi_bound(tmpl, data, optimum, boundary, eta, seed=seed, options=options,
                                    sensitivity=sens) for eta in etas]
    respected = sum(1 for e in estimates if e.respected)
    return PhiReport(estimates=estimates, respected_count=respected, instances=len(estimates))

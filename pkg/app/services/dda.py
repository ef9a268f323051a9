"""
Data-based deterministic approximation: program assembly, feasibility checks,
boundary-forming point detection and optimality certificates.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.optimize import nnls

from app.core.config import settings
from app.core.exceptions import ConfigurationError, SolverError
from app.models.dataset import DataSet
from app.models.program import AssembledProgram, BoundaryReport, ProblemTemplate
from app.models.solver import SolveResult, SolverOptions
from app.services import qpsolver

logger = logging.getLogger(__name__)


def assemble(tmpl: ProblemTemplate, data: DataSet) -> AssembledProgram:
    """
    Stack the generator rows of every point (data order, then row order) under
    the template's base rows. Duplicate points give duplicate rows.

    Raises:
        ConfigurationError: point dimensions differ from the template's
        ValueError: generator returned the wrong number of rows
    """
    if tmpl.point_dims is not None and data.size and data.dims != tuple(tmpl.point_dims):
        raise ConfigurationError(f"data dims {data.dims} differ from template dims {tuple(tmpl.point_dims)}")
    n, m = tmpl.n, tmpl.m
    G_gen, h_gen = tmpl.generator.stack(data.vectors) if data.size else (None, np.zeros(0))
    if G_gen is None:
        G_gen = sp.csr_matrix((0, n))
    if G_gen.shape != (data.size * m, n) or h_gen.shape[0] != data.size * m:
        raise ValueError(f"generator produced {G_gen.shape[0]} rows for {data.size} points, expected m={m} each")

    n_base = tmpl.G_base.shape[0]
    G = sp.vstack([sp.csr_matrix(tmpl.G_base, shape=(n_base, n)), G_gen], format="csr")
    h = np.concatenate([tmpl.h_base, h_gen])
    provenance = np.concatenate([np.full(n_base, -1, dtype=np.int64),
                                 np.repeat(np.arange(data.size, dtype=np.int64), m)])
    return AssembledProgram(
        Q=tmpl.Q, c=tmpl.c, c0=tmpl.c0, E=tmpl.E, b=tmpl.b, G=G, h=h,
        lb=tmpl.lb, ub=tmpl.ub, provenance=provenance, rows_per_point=m, n_points=data.size,
    )


def check_feasible(prog: AssembledProgram, x: np.ndarray, tol: Optional[float] = None) -> Tuple[bool, float]:
    """
    Worst violation of any row or bound at x.

    Returns:
        (max violation <= tol, max violation)
    """
    tol = settings.FEASIBILITY_TOL if tol is None else tol
    x = np.asarray(x, dtype=float)
    worst = 0.0
    if prog.G.shape[0]:
        worst = max(worst, float(np.max(prog.G @ x - prog.h)))
    if prog.E.shape[0]:
        worst = max(worst, float(np.max(np.abs(prog.E @ x - prog.b))))
    with np.errstate(invalid="ignore"):
        worst = max(worst, float(np.max(np.where(np.isfinite(prog.lb), prog.lb - x, 0.0), initial=0.0)))
        worst = max(worst, float(np.max(np.where(np.isfinite(prog.ub), x - prog.ub, 0.0), initial=0.0)))
    return worst <= tol, worst


def _solve_or_raise(prog: AssembledProgram, options: Optional[SolverOptions], what: str,
                    warm_start: Optional[SolveResult] = None) -> SolveResult:
    result = qpsolver.solve(prog, options, warm_start=warm_start)
    if not result.is_optimal:
        raise SolverError(f"{what}: solver returned {result.status.value}", status=result.status.value)
    return result


def solve_template(tmpl: ProblemTemplate, data: DataSet, options: Optional[SolverOptions] = None) -> SolveResult:
    """Assemble and solve D-DA(data); raises SolverError unless optimal."""
    return _solve_or_raise(assemble(tmpl, data), options, f"D-DA over {data.size} points")


def _objective_changed(a: float, b: float, tol: float) -> bool:
    return abs(a - b) > tol * max(1.0, abs(b))


def find_boundary_points(tmpl: ProblemTemplate, data: DataSet, optimum: SolveResult,
                         tol: Optional[float] = None, options: Optional[SolverOptions] = None,
                         objective_tol: Optional[float] = None) -> BoundaryReport:
    """
    Identify the points whose removal changes the optimal objective.

    Stage one screens points owning a row with zero slack at the optimum;
    stage two re-solves the program without each candidate (warm-started)
    and flags a change larger than ``objective_tol`` relative.

    Raises:
        SolverError: a leave-one-out solve did not reach optimality
    """
    tol = settings.ACTIVE_TOL if tol is None else tol
    objective_tol = settings.OBJECTIVE_CHANGE_TOL if objective_tol is None else objective_tol
    prog = assemble(tmpl, data)
    active = optimum.active_rows(prog.G, prog.h, tol)
    owners = prog.provenance[active]
    candidates = np.unique(owners[owners >= 0])
    logger.info(f"Boundary screen: {active.size} active rows from {candidates.size} candidate points")

    loo_programs = [prog.without_point(int(k)) for k in candidates]
    loo_results = qpsolver.solve_sequence(loo_programs, options, warm_start=optimum)
    loo_objectives, boundary = {}, []
    for k, result in zip(candidates, loo_results):
        if not result.is_optimal:
            raise SolverError(f"leave-one-out solve without point {int(k)} returned {result.status.value}",
                              status=result.status.value)
        loo_objectives[int(k)] = result.objective
        if _objective_changed(result.objective, optimum.objective, objective_tol):
            boundary.append(int(k))
    boundary = np.asarray(boundary, dtype=np.int64)

    # boundary constraints: active rows of boundary points carrying a positive multiplier
    duals = optimum.ineq_duals if optimum.ineq_duals is not None else np.zeros(prog.G.shape[0])
    dual_tol = settings.SOLVER_KKT_TOL * (1.0 + float(np.max(np.abs(duals), initial=0.0)))
    rows = []
    for k in boundary:
        own = active[owners == k]
        strong = own[duals[own] > dual_tol] if duals.size == prog.G.shape[0] else own
        rows.extend((strong if strong.size else own).tolist())
    report = BoundaryReport(
        boundary_points=boundary, candidate_points=candidates, active_rows=active,
        boundary_rows=np.asarray(sorted(rows), dtype=np.int64), objective=optimum.objective,
        loo_objectives=loo_objectives,
    )
    logger.info(f"Boundary points: B(z)={report.b_z}, B_c={report.b_c}")
    return report


def certify_optimal(tmpl: ProblemTemplate, data: DataSet, x: np.ndarray,
                    active_tol: Optional[float] = None, tol: float = 1e-6) -> bool:
    """
    Exact KKT test: is the feasible point x optimal for D-DA(data)?

    The multipliers of the rows active at x are found by non-negative least
    squares on the stationarity equation; x is optimal iff the residual vanishes.
    Infeasible x is never certified.
    """
    active_tol = settings.ACTIVE_TOL if active_tol is None else active_tol
    prog = assemble(tmpl, data)
    feasible, _ = check_feasible(prog, x, tol=max(active_tol, settings.FEASIBILITY_TOL))
    if not feasible:
        return False
    return _stationary(prog, x, active_tol, tol)


def _stationary(prog: AssembledProgram, x: np.ndarray, active_tol: float, tol: float) -> bool:
    gradient = prog.Q @ x + prog.c
    columns = []
    if prog.G.shape[0]:
        slack = prog.h - prog.G @ x
        act = np.flatnonzero(np.abs(slack) <= active_tol * (1.0 + np.abs(prog.h)))
        if act.size:
            columns.append(prog.G[act].toarray().T)
    n = prog.n
    eye = np.eye(n)
    at_upper = np.isfinite(prog.ub) & (np.abs(prog.ub - x) <= active_tol * (1.0 + np.abs(np.where(np.isfinite(prog.ub), prog.ub, 0.0))))
    at_lower = np.isfinite(prog.lb) & (np.abs(x - prog.lb) <= active_tol * (1.0 + np.abs(np.where(np.isfinite(prog.lb), prog.lb, 0.0))))
    if at_upper.any():
        columns.append(eye[:, at_upper])
    if at_lower.any():
        columns.append(-eye[:, at_lower])
    if prog.E.shape[0]:
        columns.append(prog.E.T)
        columns.append(-prog.E.T)
    if not columns:
        return float(np.max(np.abs(gradient), initial=0.0)) <= tol * (1.0 + float(np.max(np.abs(prog.c), initial=0.0)))
    M = np.hstack(columns)
    _, residual = nnls(M, -gradient)
    return residual <= tol * (1.0 + float(np.linalg.norm(gradient)))


def export_lp(prog: AssembledProgram, path: str, names=None) -> None:
    """
    Write the program in a plain-text LP-style format (grammar in FORMATS.md).
    Row order: equalities, base inequalities, then generated rows in data order.
    """
    n = prog.n
    names = names or [f"x{j + 1}" for j in range(n)]

    def linear(coeffs) -> str:
        parts = [f"{v:+.17g} {names[j]}" for j, v in enumerate(coeffs) if v != 0.0]
        return " ".join(parts) if parts else "0"

    lines = ["\\ D-DA program", "minimize", f" obj: {linear(prog.c)} + {prog.c0:.17g}"]
    quad = []
    for i in range(n):
        for j in range(i, n):
            v = prog.Q[i, j] if i == j else prog.Q[i, j] + prog.Q[j, i]
            if v != 0.0:
                quad.append(f"{v:+.17g} {names[i]} * {names[j]}" if i != j else f"{v:+.17g} {names[i]} ^ 2")
    if quad:
        lines.append(f"  + [ {' '.join(quad)} ] / 2")
    lines.append("subject to")
    for k in range(prog.E.shape[0]):
        lines.append(f" e{k + 1}: {linear(prog.E[k])} = {prog.b[k]:.17g}")
    G = sp.csr_matrix(prog.G)
    for k in range(G.shape[0]):
        row = G.getrow(k).toarray().ravel()
        tag = "base" if prog.provenance[k] < 0 else f"p{int(prog.provenance[k])}"
        lines.append(f" g{k + 1}_{tag}: {linear(row)} <= {prog.h[k]:.17g}")
    lines.append("bounds")
    for j in range(n):
        lo = "-inf" if not np.isfinite(prog.lb[j]) else f"{prog.lb[j]:.17g}"
        hi = "+inf" if not np.isfinite(prog.ub[j]) else f"{prog.ub[j]:.17g}"
        lines.append(f" {lo} <= {names[j]} <= {hi}")
    lines.append("end")
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


def solve_many(tmpl: ProblemTemplate, subsets, options: Optional[SolverOptions] = None,
               threads: Optional[int] = None):
    """Solve D-DA for several subsets concurrently; results keep input order."""
    threads = threads or settings.THREADS
    subsets = list(subsets)
    if threads <= 1 or len(subsets) <= 1:
        return [solve_template(tmpl, s, options) for s in subsets]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda s: solve_template(tmpl, s, options), subsets))

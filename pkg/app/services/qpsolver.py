"""
Deterministic convex QP solver for assembled programs.

    minimize    ½ xᵀQx + cᵀx
    subject to  E x = b,  G x <= h,  lb <= x <= ub

The program is rewritten as l <= A x <= u with A = [E; G; I_bounded] and
solved by an operator-splitting (ADMM) iteration on the Ruiz-equilibrated
data. The linear system of every iteration is the reduced KKT matrix
Q + σI + Aᵀ diag(ρ) A, factorized once per penalty value. Once residuals are
small the active set is read off the multipliers and the equality-constrained
KKT system is solved directly (polishing), correcting the active set until
primal feasibility and multiplier signs agree.
"""
import hashlib
import logging
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import scipy.sparse as sp
from scipy.linalg import cho_factor, cho_solve, lu_factor, lu_solve

from app.models.program import AssembledProgram
from app.models.solver import SolveResult, SolveStatus, SolverOptions, TraceRow

logger = logging.getLogger(__name__)

_MIN_SCALING = 1e-4
_MAX_SCALING = 1e4
_RHO_MIN = 1e-6
_RHO_MAX = 1e6
_RHO_EQ_FACTOR = 1e3


def _inf_norm(v) -> float:
    return float(np.max(np.abs(v))) if np.size(v) else 0.0


def _limit(norms: np.ndarray) -> np.ndarray:
    norms = np.where(norms < _MIN_SCALING, 1.0, norms)
    return np.minimum(norms, _MAX_SCALING)


def _sparse_col_norms(A: sp.csr_matrix, n: int) -> np.ndarray:
    if A.shape[0] == 0 or A.nnz == 0:
        return np.zeros(n)
    return np.asarray(abs(A).max(axis=0).todense()).ravel()


def _sparse_row_norms(A: sp.csr_matrix) -> np.ndarray:
    if A.shape[0] == 0:
        return np.zeros(0)
    if A.nnz == 0:
        return np.zeros(A.shape[0])
    return np.asarray(abs(A).max(axis=1).todense()).ravel()


def program_fingerprint(prog: AssembledProgram) -> str:
    """Content hash of every numeric field that influences a solve."""
    digest = hashlib.sha256()
    G = sp.csr_matrix(prog.G)
    for arr in (prog.Q, prog.c, prog.E, prog.b, G.data, G.indices, G.indptr, prog.h, prog.lb, prog.ub):
        a = np.ascontiguousarray(arr)
        digest.update(str(a.shape).encode())
        digest.update(a.tobytes())
    return digest.hexdigest()


class QpWorkspace:
    """Problem data in l <= Ax <= u form plus its scaling and factorization."""

    def __init__(self, prog: AssembledProgram, options: SolverOptions):
        self.options = options
        self.prog = prog
        n = prog.n
        self.n = n
        self.n_eq = int(prog.E.shape[0])
        G = sp.csr_matrix(prog.G) if prog.G is not None else sp.csr_matrix((0, n))
        self.n_ineq = int(G.shape[0])
        self.bounded = np.flatnonzero(np.isfinite(prog.lb) | np.isfinite(prog.ub))

        self.P = np.asarray(prog.Q, dtype=float)
        self.q = np.asarray(prog.c, dtype=float)
        self.A = sp.vstack([
            sp.csr_matrix(prog.E, shape=(self.n_eq, n)),
            G,
            sp.identity(n, format="csr")[self.bounded],
        ], format="csr")
        self.l = np.concatenate([prog.b, np.full(self.n_ineq, -np.inf), prog.lb[self.bounded]]).astype(float)
        self.u = np.concatenate([prog.b, prog.h, prog.ub[self.bounded]]).astype(float)
        self.m = int(self.A.shape[0])
        self.eq_mask = np.isfinite(self.l) & np.isfinite(self.u) & (self.l == self.u)
        self.free_mask = ~np.isfinite(self.l) & ~np.isfinite(self.u)

        self._scale()
        self.rho = options.rho
        self._factorize()

    # -- scaling --------------------------------------------------------
    def _scale(self):
        n, opts = self.n, self.options
        Ps, qs, As = self.P.copy(), self.q.copy(), self.A.copy()
        D, Ev, cost = np.ones(n), np.ones(self.m), 1.0
        for _ in range(opts.scaling_iter):
            col = np.maximum(np.abs(Ps).max(axis=0) if n else np.zeros(0), _sparse_col_norms(As, n))
            d = 1.0 / np.sqrt(_limit(col))
            e = 1.0 / np.sqrt(_limit(_sparse_row_norms(As))) if self.m else np.zeros(0)
            Ps = d[:, None] * Ps * d[None, :]
            As = sp.csr_matrix(sp.diags(e) @ As @ sp.diags(d)) if self.m else As
            qs = d * qs
            D *= d
            Ev *= e
            mean_col = float(np.mean(np.abs(Ps).max(axis=0))) if n else 0.0
            gamma = 1.0 / float(_limit(np.array([max(mean_col, _inf_norm(qs))]))[0])
            Ps *= gamma
            qs *= gamma
            cost *= gamma
        self.Ps, self.qs, self.As = Ps, qs, As
        self.D, self.Ev, self.cost = D, Ev, cost
        self.Dinv, self.Einv = 1.0 / D, (1.0 / Ev if self.m else Ev)
        self.ls, self.us = Ev * self.l, Ev * self.u

    def _rho_vector(self) -> np.ndarray:
        rho_vec = np.full(self.m, self.rho)
        rho_vec[self.eq_mask] = _RHO_EQ_FACTOR * self.rho
        rho_vec[self.free_mask] = _RHO_MIN
        return rho_vec

    def _factorize(self):
        self.rho_vec = self._rho_vector()
        K = self.Ps + self.options.sigma * np.eye(self.n)
        if self.m:
            K = K + np.asarray((self.As.T @ sp.diags(self.rho_vec) @ self.As).todense())
        self.factor = cho_factor(K, lower=True)

    def update_rho(self, rho: float):
        self.rho = rho
        self._factorize()

    # -- unscaled helpers -------------------------------------------------
    def unscale_x(self, xs):
        return self.D * xs

    def unscale_y(self, ys):
        return self.Ev * ys / self.cost

    def kkt_metrics(self, x: np.ndarray, y: np.ndarray) -> Dict[str, float]:
        """Unscaled primal/dual/complementarity residuals and their reference scales."""
        Ax = self.A @ x if self.m else np.zeros(0)
        over = np.where(np.isfinite(self.u), Ax - self.u, -np.inf)
        under = np.where(np.isfinite(self.l), self.l - Ax, -np.inf)
        prim = max(0.0, _inf_norm(np.maximum(np.maximum(over, under), 0.0)) if self.m else 0.0)
        Px = self.P @ x
        Aty = self.A.T @ y if self.m else np.zeros(self.n)
        dual = _inf_norm(Px + self.q + Aty)
        # multiplier sign / complementarity
        slack_u = np.where(np.isfinite(self.u), self.u - Ax, np.inf)
        slack_l = np.where(np.isfinite(self.l), Ax - self.l, np.inf)
        tiny = 1e-12 * (1.0 + _inf_norm(y))
        yp = np.where(y > tiny, y, 0.0)
        ym = np.where(-y > tiny, -y, 0.0)
        with np.errstate(invalid="ignore"):
            cu = np.where(yp > 0, yp * np.where(np.isfinite(slack_u), np.abs(slack_u), np.inf), 0.0)
            cl = np.where(ym > 0, ym * np.where(np.isfinite(slack_l), np.abs(slack_l), np.inf), 0.0)
        cu[self.eq_mask] = 0.0
        cl[self.eq_mask] = 0.0
        compl = max(_inf_norm(cu), _inf_norm(cl)) if self.m else 0.0
        finite_bounds = np.concatenate([self.l[np.isfinite(self.l)], self.u[np.isfinite(self.u)]])
        return {
            "prim": prim, "dual": dual, "compl": compl,
            "prim_scale": 1.0 + max(_inf_norm(Ax), _inf_norm(finite_bounds)),
            "dual_scale": 1.0 + max(_inf_norm(Px), _inf_norm(self.q), _inf_norm(Aty)),
            "y_scale": 1.0 + _inf_norm(y),
        }

    def kkt_ok(self, metrics: Dict[str, float]) -> bool:
        tol = self.options.kkt_tol
        return (metrics["prim"] <= tol * metrics["prim_scale"]
                and metrics["dual"] <= tol * metrics["dual_scale"]
                and metrics["compl"] <= tol * metrics["y_scale"] * metrics["prim_scale"])


class AdmmSolver:
    """ADMM iteration with polishing and infeasibility certificates."""

    def __init__(self, prog: AssembledProgram, options: Optional[SolverOptions] = None):
        self.options = options or SolverOptions()
        self.work = QpWorkspace(prog, self.options)
        self.prog = prog

    # -- polishing -------------------------------------------------------
    def _solve_reduced_kkt(self, S: np.ndarray, target: np.ndarray):
        w, opts = self.work, self.options
        n, k = w.n, S.size
        A_S = w.A[S].toarray() if k else np.zeros((0, n))
        K_exact = np.block([[w.P, A_S.T], [A_S, np.zeros((k, k))]])
        K_reg = K_exact + np.diag(np.concatenate([np.full(n, opts.polish_delta), np.full(k, -opts.polish_delta)]))
        rhs = np.concatenate([-w.q, target])
        lu = lu_factor(K_reg)
        sol = lu_solve(lu, rhs)
        scale = 1.0 + _inf_norm(rhs)
        for _ in range(opts.polish_refine_iter):
            residual = rhs - K_exact @ sol
            if _inf_norm(residual) <= 1e-14 * scale:
                break
            sol = sol + lu_solve(lu, residual)
        return sol[:n], sol[n:]

    def polish(self, x: np.ndarray, y: np.ndarray):
        """Solve the KKT system on the detected active set; None if the active set cannot be settled."""
        w, opts = self.work, self.options
        if w.m == 0:
            x_p, _ = self._solve_reduced_kkt(np.zeros(0, dtype=np.int64), np.zeros(0))
            return x_p, np.zeros(0)
        Ax = w.A @ x
        finite_u, finite_l = np.isfinite(w.u), np.isfinite(w.l)
        upper = ~w.eq_mask & finite_u & (w.u - Ax < y)
        lower = ~w.eq_mask & finite_l & (Ax - w.l < -y)
        feas_u = opts.kkt_tol * (1.0 + np.where(finite_u, np.abs(w.u), 0.0))
        feas_l = opts.kkt_tol * (1.0 + np.where(finite_l, np.abs(w.l), 0.0))
        dual_tol = opts.kkt_tol * (1.0 + _inf_norm(w.q))

        for _ in range(opts.polish_max_rounds):
            S = np.flatnonzero(w.eq_mask | upper | lower)
            target = np.where(upper, w.u, w.l)[S]
            x_p, y_S = self._solve_reduced_kkt(S, target)
            y_p = np.zeros(w.m)
            y_p[S] = y_S
            Ax_p = w.A @ x_p
            viol_u = ~w.eq_mask & ~upper & finite_u & (Ax_p - w.u > feas_u)
            viol_l = ~w.eq_mask & ~lower & finite_l & (w.l - Ax_p > feas_l)
            wrong = np.where(upper, np.maximum(-y_p, 0.0), 0.0) + np.where(lower, np.maximum(y_p, 0.0), 0.0)
            wrong_any = np.any(wrong > dual_tol)
            if not (viol_u.any() or viol_l.any() or wrong_any):
                return x_p, y_p
            if wrong_any:
                worst = int(np.argmax(wrong))
                upper[worst] = False
                lower[worst] = False
            upper |= viol_u
            lower |= viol_l
        return None

    # -- certificates ------------------------------------------------------
    def _primal_infeasible(self, dy_s: np.ndarray) -> bool:
        w, eps = self.work, self.options.eps_prim_inf
        dy = w.Ev * dy_s / w.cost
        norm = _inf_norm(dy)
        if norm <= eps:
            return False
        dy = dy / norm
        if _inf_norm(w.A.T @ dy) > eps:
            return False
        pos, neg = dy > eps, dy < -eps
        if np.any(pos & ~np.isfinite(w.u)) or np.any(neg & ~np.isfinite(w.l)):
            return False
        support = float(np.sum(w.u[pos] * dy[pos]) + np.sum(w.l[neg] * dy[neg]))
        return support < -eps

    def _dual_infeasible(self, dx_s: np.ndarray) -> bool:
        w, eps = self.work, self.options.eps_dual_inf
        dx = w.D * dx_s
        norm = _inf_norm(dx)
        if norm <= eps:
            return False
        dx = dx / norm
        if float(w.q @ dx) >= -eps or _inf_norm(w.P @ dx) > eps:
            return False
        if w.m == 0:
            return True
        Adx = w.A @ dx
        fu, fl = np.isfinite(w.u), np.isfinite(w.l)
        ok_u = ~fu | (Adx <= eps)
        ok_l = ~fl | (Adx >= -eps)
        return bool(np.all(ok_u & ok_l))

    # -- main loop -------------------------------------------------------
    def _result(self, x, y, status, iterations, metrics, polished=False, certificate=None, trace=None):
        w = self.work
        y = y if y.size == w.m else np.zeros(w.m)
        bound_duals = np.zeros(w.n)
        bound_duals[w.bounded] = y[w.n_eq + w.n_ineq:]
        objective = self.prog.objective(x) if status == SolveStatus.OPTIMAL else float("nan")
        return SolveResult(
            x=x, objective=objective, status=status, iterations=iterations,
            primal_residual=metrics["prim"], dual_residual=metrics["dual"],
            complementarity=metrics["compl"],
            eq_duals=y[:w.n_eq], ineq_duals=y[w.n_eq:w.n_eq + w.n_ineq], bound_duals=bound_duals,
            polished=polished, certificate=certificate, trace=trace or [],
        )

    def solve(self, x0: Optional[np.ndarray] = None, y0: Optional[np.ndarray] = None) -> SolveResult:
        w, opts = self.work, self.options
        alpha = opts.relaxation
        x = np.zeros(w.n) if x0 is None else np.asarray(x0, dtype=float) / w.D
        z = np.clip(w.As @ x, w.ls, w.us) if w.m else np.zeros(0)
        y = np.zeros(w.m)
        if y0 is not None and np.size(y0) == w.m:
            y = np.asarray(y0, dtype=float) * w.cost / w.Ev
        trace: List[TraceRow] = []
        metrics = w.kkt_metrics(w.unscale_x(x), w.unscale_y(y))

        for k in range(1, opts.max_iter + 1):
            x_prev, y_prev = x, y
            rhs = opts.sigma * x - w.qs
            if w.m:
                rhs = rhs + w.As.T @ (w.rho_vec * z - y)
            x_tilde = cho_solve(w.factor, rhs)
            x = alpha * x_tilde + (1.0 - alpha) * x_prev
            if w.m:
                z_relax = alpha * (w.As @ x_tilde) + (1.0 - alpha) * z
                z_new = np.clip(z_relax + y / w.rho_vec, w.ls, w.us)
                y = y + w.rho_vec * (z_relax - z_new)
                z = z_new

            if k % opts.check_interval and k != opts.max_iter:
                continue

            # residuals on unscaled data
            Ax = w.As @ x if w.m else np.zeros(0)
            prim = _inf_norm(w.Einv * (Ax - z)) if w.m else 0.0
            Px, Aty = w.Ps @ x, (w.As.T @ y if w.m else np.zeros(w.n))
            dual = _inf_norm(w.Dinv * (Px + w.qs + Aty)) / w.cost
            prim_ref = max(_inf_norm(w.Einv * Ax), _inf_norm(w.Einv * z)) if w.m else 0.0
            dual_ref = max(_inf_norm(w.Dinv * Px), _inf_norm(w.Dinv * Aty), _inf_norm(w.Dinv * w.qs)) / w.cost
            if opts.record_trace:
                trace.append(TraceRow(iteration=k, primal_residual=prim, dual_residual=dual, rho=w.rho))

            converged = (prim <= opts.eps_abs + opts.eps_rel * prim_ref
                         and dual <= opts.eps_abs + opts.eps_rel * dual_ref)
            near = (prim <= opts.polish_trigger * (1.0 + prim_ref)
                    and dual <= opts.polish_trigger * (1.0 + dual_ref))

            x_u, y_u = w.unscale_x(x), w.unscale_y(y)
            if opts.polish and (converged or near):
                polished = self.polish(x_u, y_u)
                if polished is not None:
                    metrics = w.kkt_metrics(*polished)
                    if w.kkt_ok(metrics):
                        logger.debug(f"Polished optimum after {k} iterations")
                        return self._result(polished[0], polished[1], SolveStatus.OPTIMAL, k, metrics,
                                            polished=True, trace=trace)
            if converged:
                metrics = w.kkt_metrics(x_u, y_u)
                if w.kkt_ok(metrics):
                    return self._result(x_u, y_u, SolveStatus.OPTIMAL, k, metrics, trace=trace)

            if w.m and self._primal_infeasible(y - y_prev):
                metrics = w.kkt_metrics(x_u, y_u)
                logger.info(f"Primal infeasibility certificate after {k} iterations")
                return self._result(x_u, y_u, SolveStatus.INFEASIBLE, k, metrics,
                                    certificate="dual_ray", trace=trace)
            if self._dual_infeasible(x - x_prev):
                metrics = w.kkt_metrics(x_u, y_u)
                logger.info(f"Dual infeasibility certificate after {k} iterations")
                return self._result(x_u, y_u, SolveStatus.UNBOUNDED, k, metrics,
                                    certificate="primal_ray", trace=trace)

            if opts.adaptive_rho and w.m and k % opts.adaptive_rho_interval == 0:
                pri_rel = _inf_norm(Ax - z) / max(_inf_norm(Ax), _inf_norm(z), 1e-10)
                dua_rel = _inf_norm(Px + w.qs + Aty) / max(_inf_norm(Px), _inf_norm(Aty), _inf_norm(w.qs), 1e-10)
                rho_new = float(np.clip(w.rho * np.sqrt(pri_rel / max(dua_rel, 1e-10)), _RHO_MIN, _RHO_MAX))
                if rho_new > 5.0 * w.rho or rho_new < w.rho / 5.0:
                    w.update_rho(rho_new)

        x_u, y_u = w.unscale_x(x), w.unscale_y(y)
        metrics = w.kkt_metrics(x_u, y_u)
        if metrics["prim"] > opts.stall_tol * metrics["prim_scale"]:
            logger.warning(f"Primal residual stalled at {metrics['prim']:.3e}; reporting infeasible")
            return self._result(x_u, y_u, SolveStatus.INFEASIBLE, opts.max_iter, metrics,
                                certificate="stall", trace=trace)
        logger.warning(f"Iteration limit {opts.max_iter} reached")
        return self._result(x_u, y_u, SolveStatus.ITER_LIMIT, opts.max_iter, metrics, trace=trace)


def solve(prog: AssembledProgram, options: Optional[SolverOptions] = None,
          warm_start: Optional[SolveResult] = None) -> SolveResult:
    """
    Solve one assembled program.

    Args:
        prog: program to solve
        options: tolerances; defaults come from settings
        warm_start: previous result whose primal point (and multipliers when
            the row structure matches) seeds the iteration

    Returns:
        SolveResult; status is never randomised and the same input gives the same bits
    """
    solver = AdmmSolver(prog, options)
    x0 = y0 = None
    if warm_start is not None and warm_start.x is not None and warm_start.x.shape[0] == prog.n:
        x0 = warm_start.x
        if warm_start.eq_duals is not None and warm_start.ineq_duals is not None:
            y_prev = np.concatenate([warm_start.eq_duals, warm_start.ineq_duals,
                                     warm_start.bound_duals[solver.work.bounded]])
            if y_prev.size == solver.work.m:
                y0 = y_prev
    result = solver.solve(x0, y0)
    logger.debug(f"Solve finished: status={result.status.value}, iterations={result.iterations}")
    return result


def solve_sequence(programs: Sequence[AssembledProgram], options: Optional[SolverOptions] = None,
                   warm_start: Optional[SolveResult] = None) -> List[SolveResult]:
    """Solve programs in order, warm-starting each from the previous optimum."""
    results: List[SolveResult] = []
    seen: Dict[str, SolveResult] = {}
    previous = warm_start
    for prog in programs:
        key = program_fingerprint(prog)
        if key in seen:
            result = seen[key].model_copy()
        else:
            result = solve(prog, options, warm_start=previous if previous is not None and previous.is_optimal else None)
            seen[key] = result
        results.append(result)
        previous = result
    return results


def dump_trace_csv(result: SolveResult, path: str) -> None:
    """Write the per-check residual trace of a solve to CSV."""
    frame = pd.DataFrame([row.model_dump() for row in result.trace],
                         columns=["iteration", "primal_residual", "dual_residual", "rho"])
    frame.to_csv(path, index=False)

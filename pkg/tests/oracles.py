"""
Reference solutions for small strictly convex QPs by active-set enumeration.
"""
import itertools
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp

from app.models.program import AssembledProgram


def make_program(Q, c, G=None, h=None, E=None, b=None, lb=None, ub=None) -> AssembledProgram:
    """An assembled program with only base rows."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    c = np.asarray(c, dtype=float).ravel()
    n = c.shape[0]
    G = np.zeros((0, n)) if G is None else np.atleast_2d(np.asarray(G, dtype=float))
    h = np.zeros(0) if h is None else np.asarray(h, dtype=float).ravel()
    E = np.zeros((0, n)) if E is None else np.atleast_2d(np.asarray(E, dtype=float))
    b = np.zeros(0) if b is None else np.asarray(b, dtype=float).ravel()
    return AssembledProgram(
        Q=Q, c=c, c0=0.0, E=E, b=b, G=sp.csr_matrix(G), h=h,
        lb=np.full(n, -np.inf) if lb is None else np.asarray(lb, dtype=float),
        ub=np.full(n, np.inf) if ub is None else np.asarray(ub, dtype=float),
        provenance=np.full(G.shape[0], -1, dtype=np.int64), rows_per_point=0, n_points=0,
    )


def random_strictly_convex_qp(rng: np.random.Generator, n: int = 3, m: int = 5) -> Tuple[np.ndarray, ...]:
    """Q = MᵀM + 0.1·I and rows G x <= h that a random x0 satisfies strictly."""
    M = rng.normal(size=(n, n))
    Q = M.T @ M + 0.1 * np.eye(n)
    c = rng.normal(size=n)
    G = rng.normal(size=(m, n))
    x0 = rng.normal(size=n)
    h = G @ x0 + rng.uniform(0.1, 1.0, size=m)
    return Q, c, G, h


def enumerate_active_sets(Q, c, G, h, tol: float = 1e-9) -> Optional[np.ndarray]:
    """Try every row subset of size <= n; return the KKT point, or None."""
    n, m = Q.shape[0], G.shape[0]
    for size in range(0, min(n, m) + 1):
        for S in itertools.combinations(range(m), size):
            S = list(S)
            A = G[S]
            K = np.block([[Q, A.T], [A, np.zeros((size, size))]])
            rhs = np.concatenate([-c, h[S]])
            try:
                sol = np.linalg.solve(K, rhs)
            except np.linalg.LinAlgError:
                continue
            x, lam = sol[:n], sol[n:]
            if np.all(lam >= -tol) and np.all(G @ x <= h + tol * (1.0 + np.abs(h))):
                return x
    return None

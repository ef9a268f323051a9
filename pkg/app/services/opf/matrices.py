"""
DC power-flow matrices of a grid case.
"""
import logging

import numpy as np
import scipy.sparse as sp
from scipy.linalg import lu_factor, lu_solve
from scipy.sparse.csgraph import connected_components

from app.core.exceptions import SingularNetworkError
from app.models.grid import DcMatrices
from app.schemas.grid import GridCase

logger = logging.getLogger(__name__)

_CONDITION_LIMIT = 1e12


def build_matrices(case: GridCase) -> DcMatrices:
    """
    Incidence matrices, susceptance Laplacian and the bordered inverse B̆.

    Raises:
        SingularNetworkError: disconnected network or numerically singular B̂
    """
    pos = case.bus_position
    nb, g, r = case.n_bus, case.n_gen, case.n_renewable

    A = np.zeros((nb, g))
    for i, gen in enumerate(case.generators):
        A[pos[gen.bus], i] = 1.0
    C = np.zeros((nb, r))
    for k, ren in enumerate(case.renewables):
        C[pos[ren.bus], k] = 1.0

    B = np.zeros((nb, nb))
    flow = np.zeros((len(case.branches), nb))
    ends_i, ends_j = [], []
    for k, br in enumerate(case.branches):
        i, j = pos[br.from_bus], pos[br.to_bus]
        b = br.susceptance
        B[i, i] += b
        B[j, j] += b
        B[i, j] -= b
        B[j, i] -= b
        flow[k, i] = b
        flow[k, j] = -b
        ends_i.append(i)
        ends_j.append(j)

    adjacency = sp.coo_matrix((np.ones(len(ends_i)), (ends_i, ends_j)), shape=(nb, nb))
    n_components, _ = connected_components(adjacency, directed=False)
    if n_components > 1:
        raise SingularNetworkError(f"case '{case.name}' network has {n_components} islands; B_hat is singular")

    ref = pos[case.reference_bus]
    keep = np.delete(np.arange(nb), ref)
    B_hat = B[np.ix_(keep, keep)]
    condition = float(np.linalg.cond(B_hat))
    if not np.isfinite(condition) or condition > _CONDITION_LIMIT:
        raise SingularNetworkError(f"B_hat of case '{case.name}' is singular (condition number {condition:.3e})")
    inverse = lu_solve(lu_factor(B_hat), np.eye(nb - 1))
    B_breve = np.zeros((nb, nb))
    B_breve[np.ix_(keep, keep)] = inverse

    logger.debug(f"DC matrices for '{case.name}': {nb} buses, {len(case.branches)} branches, cond(B_hat)={condition:.3e}")
    return DcMatrices(A=A, B=B, C=C, B_hat=B_hat, B_breve=B_breve, branch_flow=flow, reference=ref)

from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, Field, model_validator


class RowGenerator:
    """Maps one uncertainty vector ξ to m affine rows G_ξ x <= h_ξ."""

    m: int = 0

    def rows(self, xi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def stack(self, vectors: np.ndarray) -> Tuple[sp.csr_matrix, np.ndarray]:
        """Rows for a batch of points, data order first then generator order."""
        blocks, rhs = [], []
        for xi in vectors:
            G, h = self.rows(xi)
            G = np.atleast_2d(np.asarray(G, dtype=float))
            h = np.asarray(h, dtype=float).ravel()
            if G.shape[0] != self.m or h.shape[0] != self.m:
                raise ValueError(
                    f"generator returned {G.shape[0]} rows / {h.shape[0]} bounds, expected {self.m}")
            blocks.append(G)
            rhs.append(h)
        if not blocks:
            return None, np.zeros(0)
        return sp.csr_matrix(np.vstack(blocks)), np.concatenate(rhs)


class CallableRowGenerator(RowGenerator):
    """Wraps a pure function ``fn(xi) -> (G, h)``."""

    def __init__(self, fn: Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]], m: int):
        self.fn = fn
        self.m = m

    def rows(self, xi):
        return self.fn(np.asarray(xi, dtype=float))


class AffineRowGenerator(RowGenerator):
    """Rows affine in the centered uncertainty ξc = ξ - center:

        G(ξ) = G0 + Σ_j ξc_j G_j,    h(ξ) = h0 + H ξc
    """

    def __init__(self, G0, G_coeffs: Sequence, h0, H, center=None):
        self.G0 = sp.csr_matrix(G0, dtype=float)
        self.m, self.n = self.G0.shape
        self.r = len(G_coeffs)
        self.G_coeffs = [sp.csr_matrix(Gj, dtype=float) for Gj in G_coeffs]
        self.h0 = np.asarray(h0, dtype=float).ravel()
        self.H = np.asarray(H, dtype=float).reshape(self.m, self.r)
        self.center = np.zeros(self.r) if center is None else np.asarray(center, dtype=float).ravel()
        for Gj in self.G_coeffs:
            if Gj.shape != self.G0.shape:
                raise ValueError("all coefficient matrices must match G0's shape")
        if self.h0.shape[0] != self.m:
            raise ValueError("h0 length must equal the number of rows")

    def rows(self, xi):
        xc = np.asarray(xi, dtype=float).ravel() - self.center
        G = self.G0.toarray()
        for j, Gj in enumerate(self.G_coeffs):
            if xc[j] != 0.0:
                G = G + xc[j] * Gj.toarray()
        return G, self.h0 + self.H @ xc

    def stack(self, vectors):
        vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
        K = vectors.shape[0]
        if K == 0:
            return None, np.zeros(0)
        xc = vectors - self.center
        G = sp.kron(np.ones((K, 1)), self.G0, format="csr")
        for j, Gj in enumerate(self.G_coeffs):
            if Gj.nnz:
                G = G + sp.kron(xc[:, j:j + 1], Gj, format="csr")
        h = (self.h0[None, :] + xc @ self.H.T).ravel()
        return sp.csr_matrix(G), h


class ProblemTemplate(BaseModel):
    """Convex quadratic objective plus a per-point affine constraint generator.

    Objective: ½ xᵀQx + cᵀx + c0. Base constraints: E x = b, optional
    ξ-independent rows G_base x <= h_base, and box bounds lb <= x <= ub.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    Q: np.ndarray
    c: np.ndarray
    c0: float = 0.0
    generator: Any
    E: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None
    G_base: Optional[np.ndarray] = None
    h_base: Optional[np.ndarray] = None
    lb: Optional[np.ndarray] = None
    ub: Optional[np.ndarray] = None
    point_dims: Optional[Tuple[int, int]] = None
    variable_names: Optional[List[str]] = None
    metadata: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check(self):
        n = self.c.shape[0]
        if self.Q.shape != (n, n):
            raise ValueError(f"Q must be {n}x{n}")
        if not np.allclose(self.Q, self.Q.T, atol=1e-12):
            raise ValueError("Q must be symmetric")
        if n and np.linalg.eigvalsh(self.Q).min() < -1e-8 * max(1.0, np.abs(self.Q).max()):
            raise ValueError("Q must be positive semidefinite")
        if not isinstance(self.generator, RowGenerator):
            raise ValueError("generator must be a RowGenerator")
        for name in ("E", "G_base"):
            mat = getattr(self, name)
            if mat is not None and mat.shape[1] != n:
                raise ValueError(f"{name} must have {n} columns")
        fill = {"E": (0, n), "b": (0,), "G_base": (0, n), "h_base": (0,)}
        for name, shape in fill.items():
            if getattr(self, name) is None:
                object.__setattr__(self, name, np.zeros(shape))
        if self.lb is None:
            object.__setattr__(self, "lb", np.full(n, -np.inf))
        if self.ub is None:
            object.__setattr__(self, "ub", np.full(n, np.inf))
        return self

    @property
    def n(self) -> int:
        return int(self.c.shape[0])

    @property
    def m(self) -> int:
        return int(self.generator.m)

    def objective(self, x: np.ndarray) -> float:
        return float(0.5 * x @ self.Q @ x + self.c @ x + self.c0)


class AssembledProgram(BaseModel):
    """D-DA instance: stacked generator rows for every point plus base rows.

    ``provenance[i]`` is the data position that produced inequality row i, or
    -1 for base inequality rows (which come first).
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    Q: np.ndarray
    c: np.ndarray
    c0: float
    E: np.ndarray
    b: np.ndarray
    G: Any  # scipy.sparse.csr_matrix
    h: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    provenance: np.ndarray
    rows_per_point: int
    n_points: int

    @property
    def n(self) -> int:
        return int(self.c.shape[0])

    @property
    def n_base_rows(self) -> int:
        return int(self.E.shape[0] + np.count_nonzero(self.provenance < 0))

    @property
    def n_generated_rows(self) -> int:
        return int(np.count_nonzero(self.provenance >= 0))

    @property
    def n_rows(self) -> int:
        return int(self.E.shape[0] + self.G.shape[0])

    def objective(self, x: np.ndarray) -> float:
        return float(0.5 * x @ self.Q @ x + self.c @ x + self.c0)

    def without_point(self, position: int) -> "AssembledProgram":
        """The same program with every row produced by one data point removed."""
        keep = self.provenance != position
        provenance = self.provenance[keep]
        provenance = np.where(provenance > position, provenance - 1, provenance)
        return self.model_copy(update={
            "G": self.G[np.flatnonzero(keep)],
            "h": self.h[keep],
            "provenance": provenance,
            "n_points": self.n_points - 1,
        })


class BoundaryReport(BaseModel):
    """Boundary-forming points of an optimum and the rows they own."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    boundary_points: np.ndarray     # positions in the data subset
    candidate_points: np.ndarray    # positions owning at least one active row
    active_rows: np.ndarray         # inequality row indices with zero slack
    boundary_rows: np.ndarray       # active rows owned by boundary points
    objective: float
    loo_objectives: Dict[int, float] = Field(default_factory=dict)

    @property
    def b_z(self) -> int:
        return int(self.boundary_points.shape[0])

    @property
    def b_c(self) -> int:
        return int(self.boundary_rows.shape[0])

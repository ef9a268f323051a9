import numpy as np
from pydantic import BaseModel, ConfigDict


class DcMatrices(BaseModel):
    """DC power-flow matrices of a case.

    A: generator incidence (n_bus x g), B: susceptance Laplacian,
    C: renewable incidence (n_bus x r), B_hat: B without the reference row and
    column, B_breve: bordered inverse with zero reference row/column,
    branch_flow: per-branch row b_ij (e_i - e_j)ᵀ so that flow = branch_flow θ.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    B_hat: np.ndarray
    B_breve: np.ndarray
    branch_flow: np.ndarray
    reference: int

    @property
    def non_reference(self) -> np.ndarray:
        return np.delete(np.arange(self.B.shape[0]), self.reference)


class OpfDecision(BaseModel):
    """Day-ahead dispatch in MW, angles in rad (θ_ref = 0) and participation factors."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    p_gen_mw: np.ndarray
    theta: np.ndarray
    participation: np.ndarray
    objective: float

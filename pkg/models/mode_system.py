from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps
from scipy.sparse.linalg import SuperLU


@dataclass(frozen=True, eq=False)
class ModeSystem:
    """Factorized linear system of one x-wavenumber.

    Unknowns are interleaved (phi_0, mu_0, phi_1, mu_1, ...) so the operator is
    banded; the two boundary rows carry the eliminated surface equations.
    Elliptic systems (no time terms) hold phi only.
    """

    k: int
    q: float
    dt: float
    matrix: sps.csc_matrix
    lu: SuperLU

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def solve(self, rhs: np.ndarray) -> tuple[np.ndarray, float]:
        """Solve for a complex right-hand side; returns (solution, relative residual)."""
        stacked = np.column_stack([rhs.real, rhs.imag])
        sol = self.lu.solve(stacked)
        resid = self.matrix @ sol - stacked
        scale = max(float(np.max(np.abs(stacked))), np.finfo(float).tiny)
        return sol[:, 0] + 1j * sol[:, 1], float(np.max(np.abs(resid))) / scale

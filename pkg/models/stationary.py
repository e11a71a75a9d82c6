from dataclasses import dataclass

from models.state import State


@dataclass(frozen=True)
class StationaryResult:
    """Equilibrium (phi*, psi*) with its Lagrange multipliers.

    The surface multiplier is carried per boundary circle; ``lambda2`` is
    their length-weighted mean.
    """

    state: State
    lambda1: float
    lambda2_bot: float
    lambda2_top: float
    residual_bulk: float
    residual_surf: float
    iterations: int
    verdict: str
    energy: float = 0.0
    pseudo_steps: int = 0

    @property
    def lambda2(self) -> float:
        return 0.5 * (self.lambda2_bot + self.lambda2_top)

    @property
    def converged(self) -> bool:
        return self.verdict == "converged"

    @property
    def residual(self) -> float:
        return max(self.residual_bulk, self.residual_surf)

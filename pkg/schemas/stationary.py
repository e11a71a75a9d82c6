from typing import List, Optional

from pydantic import BaseModel, Field


class StabilityVerdict(BaseModel):
    """Outcome of perturbing an equilibrium and watching where trajectories go.

    Empirical evidence only: a bounded excursion over a finite horizon is not a
    proof of Lyapunov stability.
    """

    n_trials: int = Field(..., ge=1)
    eps: float
    escape_radius: float
    max_excursion: float
    # max_excursion / eps
    relative_excursion: float = 0.0
    escaped: bool
    energy_comparison: float
    excursions: List[float] = []
    final_energies: List[float] = []
    label: str = "empirical"
    note: Optional[str] = None


class MultiplierCheck(BaseModel):
    """Multipliers of one equilibrium computed three independent ways."""

    kkt: tuple[float, float]
    mean_value: tuple[float, float]
    linear_system: Optional[tuple[float, float]] = None
    compatibility_defect: Optional[float] = None
    max_relative_gap: float

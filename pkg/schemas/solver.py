from typing import Optional

from pydantic import BaseModel, ConfigDict, Field


class SolverParams(BaseModel):
    """Time-step parameters of the stabilized linearly-implicit scheme."""

    model_config = ConfigDict(frozen=True)

    dt: float = Field(1e-4, gt=0)
    kappa: float = Field(0.1, ge=0)
    alpha: float = Field(0.0, ge=0, le=1)
    S_bulk: float = Field(2.0, ge=0)
    S_surf: float = Field(2.0, ge=0)
    max_energy_uptick: float = Field(1e-10, gt=0)
    max_halvings: int = Field(8, ge=0)
    linear_tol: float = Field(1e-8, gt=0)
    equilibrium_tol: float = Field(1e-5, gt=0)


class EnergyReport(BaseModel):
    t: float
    e_bulk: float
    e_surf: float
    e_total: float
    d_bulk: float = 0.0
    d_surf: float = 0.0
    d_visc: float = 0.0
    m_bulk: float
    m_bot: float
    m_top: float

    @property
    def dissipation(self) -> float:
        return self.d_bulk + self.d_surf + self.d_visc

    @property
    def speed(self) -> float:
        """||grad mu|| + ||grad_Gamma mu_Gamma||, the equilibrium criterion."""
        return self.d_bulk**0.5 + self.d_surf**0.5


class StepReport(BaseModel):
    dt: float
    halvings: int
    energy_before: float
    energy_after: float
    residual: float
    m_bulk: float
    m_bot: float
    m_top: float
    message: Optional[str] = None

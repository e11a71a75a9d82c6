from typing import List, Literal, Optional

from pydantic import BaseModel


class ConservationReport(BaseModel):
    tol: float
    drift_bulk: float
    drift_bot: float
    drift_top: float
    first_violation: Optional[int] = None
    violated: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.first_violation is None


class EnergyLawRun(BaseModel):
    dt: float
    steps: int
    monotone: bool
    worst_uptick: float
    max_defect: float
    mean_defect: float
    min_d_visc: float


class EnergyLawReport(BaseModel):
    runs: List[EnergyLawRun]
    # ratios of mean defects between successive runs (coarse / fine)
    ratios: List[float] = []
    ratio_window: tuple[float, float] = (1.7, 2.3)

    @property
    def monotone(self) -> bool:
        return all(r.monotone for r in self.runs)

    @property
    def consistent(self) -> bool:
        low, high = self.ratio_window
        return all(low <= r <= high for r in self.ratios)

    @property
    def passed(self) -> bool:
        return self.monotone and self.consistent


class RateFit(BaseModel):
    """Decay model of an energy gap; only the exponent is fitted, never the constant."""

    model: Literal["power", "exponential"]
    exponent: float
    residual: float
    theta: Optional[float] = None
    other_residual: float
    decaying: bool
    monotone_tail: bool
    n_samples: int
    e_inf: Optional[float] = None


class EllipticLevel(BaseModel):
    n: int
    error_phi: float
    error_psi: float
    data_norm: float
    stability_ratio: float
    residual: float


class ConvergenceReport(BaseModel):
    kappa: float
    levels: List[EllipticLevel]
    orders_phi: List[float]
    orders_psi: List[float]
    min_order: float = 1.8

    @property
    def passed(self) -> bool:
        orders = self.orders_phi + self.orders_psi
        if not orders:
            return all(level.error_phi < 1e-12 and level.error_psi < 1e-12 for level in self.levels)
        return min(orders) >= self.min_order


class SensitivityReport(BaseModel):
    """Growth of the H^-1 distance between two runs, relative to its initial value."""

    times: List[float]
    distances: List[float]
    ratios: List[float]
    growth_rate: float
    exact_match: bool
    bounded: bool
    norm: str = "discrete H^-1 proxy"


class CauchyGapReport(BaseModel):
    parameters: List[float]
    reference: float
    gaps: List[float]
    successive: List[float]
    monotone: bool
    halved: bool
    # successive gaps |phi(p_i) - phi(p_i+1)| strictly decreasing
    cauchy: bool

    @property
    def passed(self) -> bool:
        return self.monotone and self.halved and self.cauchy


class CheckOutcome(BaseModel):
    """One row of the verification summary."""

    name: str
    passed: bool
    value: str
    detail: Optional[str] = None

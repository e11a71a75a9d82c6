from dataclasses import dataclass

import numpy as np

from models.grid import BulkField, Component, TraceField


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class State:
    """Bulk field phi at one time; the traces are its boundary rows (stored once)."""

    phi: BulkField
    time: float = 0.0

    def __post_init__(self):
        phi = _frozen(self.phi)
        if phi.ndim != 2:
            raise ValueError(f"phi must be 2-D (Ny+1, Nx), got shape {phi.shape}")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "time", float(self.time))

    @property
    def psi_bot(self) -> TraceField:
        return self.phi[0]

    @property
    def psi_top(self) -> TraceField:
        return self.phi[-1]

    def trace(self, component: Component) -> TraceField:
        return self.psi_bot if Component(component) is Component.BOT else self.psi_top

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.phi)))

    def with_phi(self, phi: BulkField, time: float | None = None) -> "State":
        return State(phi=phi, time=self.time if time is None else time)


@dataclass(frozen=True, eq=False)
class ChemPotentials:
    mu: BulkField
    mu_gamma_bot: TraceField
    mu_gamma_top: TraceField

    def __post_init__(self):
        for name in ("mu", "mu_gamma_bot", "mu_gamma_top"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    def mu_gamma(self, component: Component) -> TraceField:
        return self.mu_gamma_bot if Component(component) is Component.BOT else self.mu_gamma_top

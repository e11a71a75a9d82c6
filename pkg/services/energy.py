"""Free energy, chemical potentials and dissipation of the bulk-surface system."""
import logging

import numpy as np

from core.errors import SolverError
from models.grid import BulkField, Component, Grid, TraceField
from models.potential import Potential
from models.state import ChemPotentials, State
from schemas.solver import EnergyReport
from services import geometry as geo

logger = logging.getLogger(__name__)


def total_energy(s: State, F: Potential, G: Potential, kappa: float, g: Grid) -> EnergyReport:
    phi = s.phi
    e_bulk = 0.5 * geo.bulk_grad_norm_sq(phi, g) + geo.bulk_integral(F.value(phi), g)
    e_surf = 0.0
    for psi in (s.psi_bot, s.psi_top):
        e_surf += 0.5 * kappa * geo.surface_grad_norm_sq(psi, g)
        e_surf += geo.surface_integral(0.5 * psi**2 + G.value(psi), g)
    return EnergyReport(
        t=s.time,
        e_bulk=e_bulk,
        e_surf=e_surf,
        e_total=e_bulk + e_surf,
        m_bulk=geo.bulk_mean(phi, g),
        m_bot=geo.surface_mean(s.psi_bot, g),
        m_top=geo.surface_mean(s.psi_top, g),
    )


def chemical_potentials(
    s_new: State,
    s_old: State,
    F: Potential,
    G: Potential,
    kappa: float,
    alpha: float,
    dt: float,
    g: Grid,
) -> ChemPotentials:
    """Pointwise mu and mu_Gamma from the 5-point and one-sided normal stencils.

    mu is defined on interior rows; its boundary rows are filled by the
    second-order no-flux closure mu_0 = (4 mu_1 - mu_2) / 3.
    """
    if alpha > 0 and not dt > 0:
        raise SolverError(f"alpha={alpha} needs dt > 0 for the time derivative, got dt={dt}")
    phi = s_new.phi
    rate = alpha * (phi - s_old.phi) / dt if alpha > 0 else np.zeros_like(phi)

    mu = np.empty_like(phi)
    mu[1:-1] = -geo.bulk_laplacian(phi, g)[1:-1] + rate[1:-1] + F.d1(phi[1:-1])
    mu[0] = (4.0 * mu[1] - mu[2]) / 3.0
    mu[-1] = (4.0 * mu[-2] - mu[-3]) / 3.0

    mu_gamma = {}
    for comp in Component:
        row = g.boundary_row(comp)
        psi = phi[row]
        mu_gamma[comp] = (
            -kappa * geo.surface_laplacian(psi, g)
            + psi
            + geo.normal_derivative(phi, g, comp)
            + rate[row]
            + G.d1(psi)
        )
    return ChemPotentials(mu=mu, mu_gamma_bot=mu_gamma[Component.BOT], mu_gamma_top=mu_gamma[Component.TOP])


def dissipation(c: ChemPotentials, g: Grid) -> tuple[float, float]:
    d_bulk = geo.bulk_grad_norm_sq(c.mu, g)
    d_surf = geo.surface_grad_norm_sq(c.mu_gamma_bot, g) + geo.surface_grad_norm_sq(c.mu_gamma_top, g)
    return d_bulk, d_surf


def energy_report(
    s: State,
    F: Potential,
    G: Potential,
    kappa: float,
    g: Grid,
    chem: ChemPotentials | None = None,
    d_visc: float = 0.0,
) -> EnergyReport:
    report = total_energy(s, F, G, kappa, g)
    if chem is None:
        return report
    d_bulk, d_surf = dissipation(chem, g)
    return report.model_copy(update={"d_bulk": d_bulk, "d_surf": d_surf, "d_visc": d_visc})


def first_variation(phi: BulkField, F: Potential, G: Potential, kappa: float, g: Grid) -> BulkField:
    """Gradient of the discrete energy with respect to the nodal values of phi.

    Pairing it with a nodal perturbation zeta (whose boundary rows are eta)
    gives the discrete <E'(phi, psi), (zeta, eta)>.
    """
    phi = np.asarray(phi, dtype=float)
    grad = geo.bulk_stiffness_apply(phi, g) + g.bulk_weights * F.d1(phi)
    for row in (0, -1):
        psi = phi[row]
        grad[row] += kappa * geo.surface_stiffness_apply(psi, g) + g.dx * (psi + G.d1(psi))
    return grad


def directional_derivative(phi: BulkField, zeta: BulkField, F: Potential, G: Potential, kappa: float, g: Grid) -> float:
    return float(np.sum(first_variation(phi, F, G, kappa, g) * np.asarray(zeta, dtype=float)))


def boundary_flux(phi: BulkField, mu_row: TraceField | float, F: Potential, g: Grid, component: Component) -> TraceField:
    """Normal derivative consistent with the discrete energy.

    The variation at a boundary node splits into the half-cell bulk part
    (dy/2) mu and the surface part; what is left after removing the surface
    terms is this flux. It equals the centered ghost-point derivative and is
    second-order accurate.
    """
    row = g.boundary_row(component)
    phi = np.asarray(phi, dtype=float)
    stiff = geo.bulk_stiffness_apply(phi, g)[row] / g.dx
    return stiff + 0.5 * g.dy * (F.d1(phi[row]) - np.asarray(mu_row, dtype=float))

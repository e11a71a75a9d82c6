"""Stabilized linearly-implicit stepper for the bulk-surface Cahn-Hilliard system.

One step solves, with c_b = S_bulk + alpha/dt and c_s = S_surf + alpha/dt,

    A phi' + W_b (F'(phi) + c_b (phi' - phi)) + W_s (psi' + G'(psi) + c_s (psi' - psi))
        = W_b mu + W_s mu_Gamma
    W_b (phi' - phi) = -dt A_b mu          (no-flux closure is built into A_b)
    W_s (psi' - psi) = -dt A_Gamma mu_Gamma

where A = A_b + kappa A_Gamma. Every linear operator is circulant in x, so a
real FFT splits the step into one banded (Ny+1)-profile system per wavenumber.
mu_Gamma is eliminated by multiplying the surface rows by dt*q, which turns
the zero mode of each circle into psi' = psi: surface mass is frozen exactly.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sps
from scipy.sparse.linalg import splu

from core.config import settings
from core.errors import SolverError, StepRejected
from models.grid import BulkField, Grid
from models.mode_system import ModeSystem
from models.potential import Potential
from models.state import ChemPotentials, State
from models.trajectory import Trajectory
from schemas.solver import EnergyReport, SolverParams, StepReport
from services import energy as en
from services import geometry as geo

logger = logging.getLogger(__name__)


def _stabilization(p: SolverParams, dt: float) -> tuple[float, float]:
    return p.S_bulk + p.alpha / dt, p.S_surf + p.alpha / dt


def _y_operator(g: Grid, q: float) -> np.ndarray:
    """Per-unit-length bulk stiffness of one mode: y-edge stiffness plus q times the weights."""
    n = g.Ny + 1
    t = np.zeros((n, n))
    idx = np.arange(n - 1)
    t[idx, idx] += 1.0
    t[idx + 1, idx + 1] += 1.0
    t[idx, idx + 1] -= 1.0
    t[idx + 1, idx] -= 1.0
    return t / g.dy + q * np.diag(g.y_weights)


def _interleave(n: int) -> np.ndarray:
    order = np.empty(2 * n, dtype=int)
    order[0::2] = np.arange(n)
    order[1::2] = n + np.arange(n)
    return order


def _factorize(matrix: np.ndarray, k: int, q: float, dt: float) -> ModeSystem:
    csc = sps.csc_matrix(matrix)
    try:
        lu = splu(csc)
    except RuntimeError as exc:
        raise SolverError(f"mode {k}: singular factorization ({exc})")
    return ModeSystem(k=k, q=float(q), dt=float(dt), matrix=csc, lu=lu)


def assemble_mode_system(k: int, p: SolverParams, g: Grid, dt: float | None = None) -> ModeSystem:
    """Banded system of wavenumber k on the interleaved unknowns (phi_j, mu_j).

    Even rows are the mass balance of node j; odd rows define mu_j on interior
    nodes and hold the eliminated surface equations on the two boundary nodes.
    """
    if not 0 <= k < g.Nx:
        raise ValueError(f"wavenumber index must be in [0, {g.Nx}), got {k}")
    dt = p.dt if dt is None else dt
    # modes above Nx/2 are the conjugates of the rfft ones
    q = g.modified_wavenumbers[min(k, g.Nx - k)]
    n = g.Ny + 1
    w = g.y_weights
    c_b, c_s = _stabilization(p, dt)
    b = _y_operator(g, q)

    m_phi = b + np.diag(c_b * w)
    m_mu = -np.diag(w)
    for j in (0, n - 1):
        row = b[j].copy()
        row[j] += c_b * w[j] + p.kappa * q + 1.0 + c_s
        m_phi[j] = dt * q * row
        m_phi[j, j] += 1.0
        m_mu[j] = 0.0
        m_mu[j, j] = -dt * q * w[j]

    block = np.block([[np.diag(w), dt * b], [m_phi, m_mu]])
    order = _interleave(n)
    return _factorize(block[np.ix_(order, order)], k, q, dt)


def assemble_elliptic_mode(k: int, kappa: float, g: Grid) -> ModeSystem:
    """Mode k of -Lap phi = h1, -kappa Lap_Gamma psi + psi + d_n phi = h2 (weak form)."""
    q = g.modified_wavenumbers[min(k, g.Nx - k)]
    m = _y_operator(g, q)
    for j in (0, g.Ny):
        m[j, j] += kappa * q + 1.0
    return _factorize(m, k, q, 0.0)


def _assemble_all(build, count: int) -> tuple[ModeSystem, ...]:
    if settings.SOLVER_WORKERS > 1:
        with ThreadPoolExecutor(max_workers=settings.SOLVER_WORKERS) as pool:
            return tuple(pool.map(build, range(count)))
    return tuple(build(k) for k in range(count))


@lru_cache(maxsize=32)
def mode_systems(g: Grid, p: SolverParams, dt: float) -> tuple[ModeSystem, ...]:
    """Factorized systems of the rfft modes 0 .. Nx/2, reused across steps."""
    logger.debug("factorizing %d mode systems (dt=%.3e)", g.Nx // 2 + 1, dt)
    return _assemble_all(lambda k: assemble_mode_system(k, p, g, dt), g.Nx // 2 + 1)


@lru_cache(maxsize=8)
def elliptic_systems(g: Grid, kappa: float) -> tuple[ModeSystem, ...]:
    return _assemble_all(lambda k: assemble_elliptic_mode(k, kappa, g), g.Nx // 2 + 1)


def linear_update(
    phi_old: BulkField,
    forcing_bulk: BulkField,
    forcing_surf: np.ndarray,
    p: SolverParams,
    g: Grid,
    dt: float | None = None,
) -> tuple[BulkField, BulkField, float]:
    """One step with the explicit terms supplied: F'(phi^n) as ``forcing_bulk``
    and G'(psi^n) on (bot, top) as ``forcing_surf`` (shape (2, Nx)).

    Returns (phi^{n+1}, mu^{n+1}, max relative linear residual).
    """
    dt = p.dt if dt is None else dt
    c_b, c_s = _stabilization(p, dt)
    systems = mode_systems(g, p, dt)
    n = g.Ny + 1
    w = g.y_weights[:, None]
    q = g.modified_wavenumbers[None, :]

    phi_hat = np.fft.rfft(phi_old, axis=1)
    fb_hat = np.fft.rfft(forcing_bulk, axis=1)
    fs_hat = np.fft.rfft(forcing_surf, axis=1)

    rhs_mass = w * phi_hat
    rhs_def = w * (c_b * phi_hat - fb_hat)
    for idx, j in enumerate((0, n - 1)):
        rhs_def[j] = phi_hat[j] + dt * q[0] * (
            w[j] * (c_b * phi_hat[j] - fb_hat[j]) + c_s * phi_hat[j] - fs_hat[idx]
        )
    rhs = np.empty((2 * n, phi_hat.shape[1]), dtype=complex)
    rhs[0::2] = rhs_mass
    rhs[1::2] = rhs_def

    new_hat = np.empty_like(phi_hat)
    mu_hat = np.empty_like(phi_hat)
    residual = 0.0
    for system in systems:
        sol, res = system.solve(rhs[:, system.k])
        new_hat[:, system.k] = sol[0::2]
        mu_hat[:, system.k] = sol[1::2]
        residual = max(residual, res)
    phi_new = np.fft.irfft(new_hat, n=g.Nx, axis=1)
    mu = np.fft.irfft(mu_hat, n=g.Nx, axis=1)
    return phi_new, mu, residual


def surface_potentials(
    phi_new: BulkField,
    phi_old: BulkField,
    mu: BulkField,
    forcing_bulk: BulkField,
    forcing_surf: np.ndarray,
    p: SolverParams,
    g: Grid,
    dt: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Recover mu_Gamma on (bot, top) from the boundary rows of the energy balance."""
    c_b, c_s = _stabilization(p, dt)
    stiff = geo.bulk_stiffness_apply(phi_new, g) / g.dx
    out = []
    for idx, row in enumerate((0, g.Ny)):
        w = g.y_weights[row]
        psi, psi_old = phi_new[row], phi_old[row]
        out.append(
            stiff[row]
            + w * (c_b * (psi - psi_old) + forcing_bulk[row] - mu[row])
            - p.kappa * geo.surface_laplacian(psi, g)
            + psi
            + c_s * (psi - psi_old)
            + forcing_surf[idx]
        )
    return out[0], out[1]


def viscous_dissipation(phi_new: BulkField, phi_old: BulkField, alpha: float, dt: float, g: Grid) -> float:
    if alpha == 0:
        return 0.0
    rate = (phi_new - phi_old) / dt
    return alpha * (
        geo.bulk_integral(rate**2, g) + geo.surface_integral(rate[0] ** 2, g) + geo.surface_integral(rate[-1] ** 2, g)
    )


@dataclass(frozen=True)
class StepOutcome:
    state: State
    report: StepReport
    chem: ChemPotentials
    d_visc: float


def _explicit_forcing(phi: BulkField, F: Potential, G: Potential) -> tuple[BulkField, np.ndarray]:
    return F.d1(phi), np.stack([G.d1(phi[0]), G.d1(phi[-1])])


def advance(
    s: State,
    p: SolverParams,
    F: Potential,
    G: Potential,
    g: Grid,
    energy_before: float | None = None,
) -> StepOutcome:
    """One accepted step, halving dt while the energy rises beyond the allowed uptick."""
    if not s.is_finite():
        raise SolverError(f"non-finite state at t={s.time}")
    if energy_before is None:
        energy_before = en.total_energy(s, F, G, p.kappa, g).e_total
    forcing_bulk, forcing_surf = _explicit_forcing(s.phi, F, G)
    allowed = energy_before + p.max_energy_uptick * abs(energy_before)

    energy_after = energy_before
    dt = p.dt
    for halvings in range(p.max_halvings + 1):
        dt = p.dt / 2**halvings
        phi_new, mu, residual = linear_update(s.phi, forcing_bulk, forcing_surf, p, g, dt)
        if not np.all(np.isfinite(phi_new)):
            raise SolverError(f"linear solve produced non-finite values at t={s.time} (dt={dt:.3e})")
        if residual > p.linear_tol:
            raise SolverError(f"linear residual {residual:.3e} exceeds {p.linear_tol:.1e} (dt={dt:.3e})")
        new_state = State(phi=phi_new, time=s.time + dt)
        report = en.total_energy(new_state, F, G, p.kappa, g)
        energy_after = report.e_total
        if energy_after <= allowed:
            mu_bot, mu_top = surface_potentials(phi_new, s.phi, mu, forcing_bulk, forcing_surf, p, g, dt)
            return StepOutcome(
                state=new_state,
                report=StepReport(
                    dt=dt,
                    halvings=halvings,
                    energy_before=energy_before,
                    energy_after=energy_after,
                    residual=residual,
                    m_bulk=report.m_bulk,
                    m_bot=report.m_bot,
                    m_top=report.m_top,
                ),
                chem=ChemPotentials(mu=mu, mu_gamma_bot=mu_bot, mu_gamma_top=mu_top),
                d_visc=viscous_dissipation(phi_new, s.phi, p.alpha, dt, g),
            )
        logger.warning(
            "energy rose %.3e -> %.3e at t=%.6g, halving dt to %.3e",
            energy_before, energy_after, s.time, dt / 2,
        )
    raise StepRejected(energy_before, energy_after, dt, p.max_halvings)


def step(s: State, p: SolverParams, F: Potential, G: Potential, g: Grid) -> tuple[State, StepReport]:
    outcome = advance(s, p, F, G, g)
    return outcome.state, outcome.report


def run(
    s0: State,
    p: SolverParams,
    F: Potential,
    G: Potential,
    g: Grid,
    t_end: float,
    observers=(),
    record_every: int = 1,
    snapshot_every: int = 0,
    max_steps: int | None = None,
) -> Trajectory:
    """Integrate from s0 up to time t_end, stopping early at equilibrium.

    A record (time, EnergyReport) is kept every ``record_every`` steps and a
    state snapshot every ``snapshot_every`` steps (0 keeps only the endpoints).
    Observers are called as ``observer(state, report, step_report)`` after
    every accepted step.

    The scheme's mu and mu_Gamma only exist once a step has been taken, so the
    dissipation of the first record (t = t0) comes from the pointwise 5-point
    and one-sided stencils of ``energy.chemical_potentials``. Every later
    record uses the mu and mu_Gamma of the accepted step. Row 0 therefore
    differs from the others by the discretization error of those stencils.
    """
    if not t_end > 0:
        raise ValueError(f"t_end must be > 0, got {t_end}")
    traj = Trajectory()
    state = s0
    initial = en.energy_report(
        s0, F, G, p.kappa, g, chem=en.chemical_potentials(s0, s0, F, G, p.kappa, 0.0, p.dt, g)
    )
    traj.append(initial)
    traj.add_snapshot(s0)
    logger.info("run start: t=%.6g -> %.6g, dt=%.3e, E=%.10g", s0.time, t_end, p.dt, initial.e_total)
    if initial.speed < p.equilibrium_tol:
        traj.status = "converged"
        traj.last_state = s0
        logger.info("initial state is already an equilibrium")
        return traj

    t_stop = s0.time + t_end
    energy = initial.e_total
    report: EnergyReport = initial
    recorded = True
    while state.time < t_stop * (1 - 1e-12) and (max_steps is None or traj.steps < max_steps):
        remaining = t_stop - state.time
        step_params = p if remaining >= p.dt * (1 - 1e-9) else p.model_copy(update={"dt": remaining})
        outcome = advance(state, step_params, F, G, g, energy_before=energy)
        state = outcome.state
        energy = outcome.report.energy_after
        traj.steps += 1
        traj.halvings += outcome.report.halvings
        report = en.energy_report(state, F, G, p.kappa, g, chem=outcome.chem, d_visc=outcome.d_visc)
        for observer in observers:
            observer(state, report, outcome.report)
        recorded = traj.steps % record_every == 0
        if recorded:
            traj.append(report, dt=outcome.report.dt)
        if snapshot_every and traj.steps % snapshot_every == 0:
            traj.add_snapshot(state)
        if report.speed < p.equilibrium_tol:
            traj.status = "converged"
            break
    else:
        traj.status = "completed"

    if not recorded:
        traj.append(report, dt=0.0)
    if traj.snapshots[-1] is not state:
        traj.add_snapshot(state)
    traj.last_state = state
    logger.info(
        "run %s after %d steps (%d halvings): t=%.6g, E=%.10g",
        traj.status, traj.steps, traj.halvings, state.time, energy,
    )
    return traj


def dense_step(s: State, p: SolverParams, F: Potential, G: Potential, g: Grid, dt: float | None = None) -> tuple[BulkField, BulkField]:
    """The same discrete step assembled densely in real space (small grids only)."""
    dt = p.dt if dt is None else dt
    c_b, c_s = _stabilization(p, dt)
    mats = {k: v.toarray() for k, v in geo.stiffness_matrices(g).items()}
    a_b, a_s, w_b, w_s = mats["A_bulk"], mats["A_surf"], mats["W_bulk"], mats["W_surf"]
    n = g.size
    phi_old = s.phi.ravel()
    forcing_bulk, forcing_surf = _explicit_forcing(s.phi, F, G)
    fs = np.zeros(g.shape)
    fs[0], fs[-1] = forcing_surf
    fs = fs.ravel()

    bnd = geo.boundary_mask(g).ravel()
    # circulant -D_xx on boundary nodes only
    s_op = a_s / g.dx
    m_full = a_b + p.kappa * a_s + (1.0 + c_s) * w_s + c_b * w_b
    rhs_def = w_b @ (c_b * phi_old - forcing_bulk.ravel()) + w_s @ (c_s * phi_old - fs)

    top = np.hstack([w_b, dt * a_b])
    bottom = np.hstack([m_full, -w_b])
    bottom_rhs = rhs_def.copy()
    surf_rows = np.hstack([np.eye(n), np.zeros((n, n))]) + (dt / g.dx) * s_op @ bottom
    surf_rhs = phi_old + (dt / g.dx) * s_op @ rhs_def
    bottom[bnd] = surf_rows[bnd]
    bottom_rhs[bnd] = surf_rhs[bnd]

    system = np.vstack([top, bottom])
    rhs = np.concatenate([w_b @ phi_old, bottom_rhs])
    sol = np.linalg.solve(system, rhs)
    return sol[:n].reshape(g.shape), sol[n:].reshape(g.shape)


def solve_elliptic(h1: BulkField, h2_bot: np.ndarray, h2_top: np.ndarray, kappa: float, g: Grid) -> tuple[BulkField, float]:
    """Solve -Lap phi = h1, phi|Gamma = psi, -kappa Lap_Gamma psi + psi + d_n phi = h2.

    Returns (phi, max relative residual).
    """
    systems = elliptic_systems(g, kappa)
    h1_hat = np.fft.rfft(np.asarray(h1, dtype=float), axis=1)
    rhs = g.y_weights[:, None] * h1_hat
    rhs[0] += np.fft.rfft(np.asarray(h2_bot, dtype=float))
    rhs[-1] += np.fft.rfft(np.asarray(h2_top, dtype=float))
    phi_hat = np.empty_like(h1_hat)
    residual = 0.0
    for system in systems:
        sol, res = system.solve(rhs[:, system.k])
        phi_hat[:, system.k] = sol
        residual = max(residual, res)
    return np.fft.irfft(phi_hat, n=g.Nx, axis=1), residual

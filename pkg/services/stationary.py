"""Equilibria of the mass-constrained energy and empirical stability probing.

A stationary pair solves, with the discrete first variation grad E,

    grad E(phi) = W_b lambda1 + W_s lambda2_c        (c = bottom or top circle)

together with the bulk mass and one mass per boundary circle. Interior rows
are -Lap phi + F'(phi) = lambda1; boundary rows, divided by dx, are
-kappa Lap_Gamma psi + psi + d_n phi + G'(psi) = lambda2_c with the
energy-consistent normal derivative.
"""
import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import scipy.sparse as sps
from scipy.sparse.linalg import spsolve

from core.config import settings
from core.errors import StationaryError
from models.grid import BulkField, Component, Grid
from models.potential import Potential
from models.state import State
from models.stationary import StationaryResult
from schemas.solver import SolverParams
from schemas.stationary import MultiplierCheck, StabilityVerdict
from services import energy as en
from services import geometry as geo
from services import spectral_solver

logger = logging.getLogger(__name__)

MASS_TOL = 1e-10
_NEWTON_SHIFT = 1e-8
_MAX_BACKTRACKS = 30


def _surface_targets(m_surf) -> tuple[float, float]:
    if np.ndim(m_surf) == 0:
        return float(m_surf), float(m_surf)
    bot, top = m_surf
    return float(bot), float(top)


def project_masses(phi: BulkField, m_bulk: float, m_bot: float, m_top: float, g: Grid) -> BulkField:
    """Shift each circle onto its mass, then the interior rows onto the bulk mass."""
    phi = np.array(phi, dtype=float, copy=True)
    phi[0] += m_bot - geo.surface_mean(phi[0], g)
    phi[-1] += m_top - geo.surface_mean(phi[-1], g)
    interior_weight = float(np.sum(g.bulk_weights[1:-1]))
    phi[1:-1] += (m_bulk * g.omega_measure - geo.bulk_integral(phi, g)) / interior_weight
    return phi


def mass_neutral_direction(rng: np.random.Generator, g: Grid) -> BulkField:
    """Random nodal direction with zero bulk mass and zero mass on each circle, unit product norm."""
    zeta = project_masses(rng.standard_normal(g.shape), 0.0, 0.0, 0.0, g)
    return zeta / geo.product_norm(zeta, g)


def multiplier_components(phi: BulkField, F: Potential, G: Potential, kappa: float, g: Grid) -> tuple[float, float, float]:
    """(lambda1, lambda2_bot, lambda2_top) from the mean-value formulas.

    lambda1 = -|Gamma| <d_n phi>_Gamma / |Omega| + <F'(phi)>_Omega, where the
    discrete normal derivative itself carries (dy/2) lambda1; the formula is
    solved for lambda1 in closed form. On each circle
    lambda2 = <d_n phi> + <psi> + <G'(psi)> (the surface Laplacian has zero mean).
    """
    phi = np.asarray(phi, dtype=float)
    base_flux = sum(geo.surface_integral(en.boundary_flux(phi, 0.0, F, g, c), g) for c in Component)
    lam1 = (geo.bulk_integral(F.d1(phi), g) - base_flux) / (g.omega_measure - 0.5 * g.dy * g.gamma_measure)
    lam2 = {}
    for comp in Component:
        psi = phi[g.boundary_row(comp)]
        normal = en.boundary_flux(phi, lam1, F, g, comp)
        lam2[comp] = geo.surface_mean(normal + psi + G.d1(psi), g)
    return float(lam1), float(lam2[Component.BOT]), float(lam2[Component.TOP])


def multipliers(s: State, F: Potential, G: Potential, kappa: float, g: Grid) -> tuple[float, float]:
    lam1, bot, top = multiplier_components(s.phi, F, G, kappa, g)
    return lam1, 0.5 * (bot + top)


def multiplier_moments(phi: BulkField, F: Potential, G: Potential, kappa: float, g: Grid) -> tuple[float, float]:
    """(l1, l2): the first variation tested against 1 and against phi itself."""
    grad = en.first_variation(phi, F, G, kappa, g)
    return float(np.sum(grad)), float(np.sum(np.asarray(phi, dtype=float) * grad))


def multiplier_system(s: State, F: Potential, G: Potential, kappa: float, g: Grid) -> tuple[float, float]:
    """Solve |Omega| l1 + |Gamma| l2 = l1, m_b |Omega| l1 + m_s |Gamma| l2 = l2 for (lambda1, lambda2).

    Needs equal masses on both circles (m_s) and m_s != m_b; otherwise the
    system is either not applicable or singular.
    """
    m_b = geo.bulk_mean(s.phi, g)
    m_bot, m_top = geo.surface_mean(s.psi_bot, g), geo.surface_mean(s.psi_top, g)
    if abs(m_bot - m_top) > 1e-12 * (1.0 + abs(m_bot)):
        raise StationaryError(f"circle masses differ ({m_bot:.6g} vs {m_top:.6g}); per-circle multipliers apply")
    m_s = 0.5 * (m_bot + m_top)
    if abs(m_s - m_b) <= 1e-12 * (1.0 + abs(m_b)):
        raise StationaryError("bulk and surface masses coincide: the multiplier system is singular")
    l1, l2 = multiplier_moments(s.phi, F, G, kappa, g)
    matrix = np.array([[g.omega_measure, g.gamma_measure], [m_b * g.omega_measure, m_s * g.gamma_measure]])
    lam1, lam2 = np.linalg.solve(matrix, [l1, l2])
    return float(lam1), float(lam2)


def stationarity_residual(
    phi: BulkField,
    lambda1: float,
    lambda2_bot: float,
    lambda2_top: float,
    F: Potential,
    G: Potential,
    kappa: float,
    g: Grid,
) -> tuple[float, float]:
    """Max-norm residuals of the bulk and surface stationary equations."""
    grad = en.first_variation(phi, F, G, kappa, g)
    w = g.bulk_weights
    bulk = float(np.max(np.abs(grad[1:-1] / w[1:-1] - lambda1)))
    surf = 0.0
    for row, lam2 in ((0, lambda2_bot), (-1, lambda2_top)):
        surf = max(surf, float(np.max(np.abs((grad[row] - w[row] * lambda1) / g.dx - lam2))))
    return bulk, surf


def _constraint_matrix(g: Grid) -> sps.csr_matrix:
    n = g.size
    rows = np.zeros((3, n))
    rows[0] = g.bulk_weights.ravel()
    rows[1, : g.Nx] = g.dx
    rows[2, n - g.Nx :] = g.dx
    return sps.csr_matrix(rows)


def _kkt_residual(phi, lam, targets, C, F, G, kappa, g) -> np.ndarray:
    grad = en.first_variation(phi, F, G, kappa, g).ravel()
    return np.concatenate([grad - C.T @ lam, C @ phi.ravel() - targets])


def _kkt_jacobian(phi, C, mats, F, G, kappa, g) -> sps.csc_matrix:
    flat = phi.ravel()
    wb = mats["W_bulk"].diagonal()
    ws = mats["W_surf"].diagonal()
    # the shift lifts the near-null translation mode of periodic patterns
    curvature = wb * F.d2(flat) + ws * (1.0 + G.d2(flat)) + _NEWTON_SHIFT * (wb + ws)
    hessian = mats["A_bulk"] + kappa * mats["A_surf"] + sps.diags(curvature)
    return sps.bmat([[hessian, -C.T], [C, None]], format="csc")


def solve_stationary(
    init: State,
    m_bulk: float,
    m_surf,
    F: Potential,
    G: Potential,
    kappa: float,
    g: Grid,
    tol: float = 1e-8,
    max_iter: int = 50,
    pre_tol: float = 1e-4,
    pseudo_dt: float = 0.1,
    pseudo_max_steps: int = 2000,
) -> StationaryResult:
    """Equilibrium with bulk mass ``m_bulk`` and surface mass ``m_surf``.

    ``m_surf`` is a scalar (same mass on both circles) or a (bottom, top)
    pair. A mass-infeasible ``init`` is projected onto the constraints. The
    solve integrates in pseudo-time until the dissipation speed drops below
    ``pre_tol``, then runs damped Newton on the KKT system.
    """
    if not tol > 0:
        raise StationaryError(f"tol must be > 0, got {tol}")
    m_bot, m_top = _surface_targets(m_surf)
    phi = project_masses(init.phi, m_bulk, m_bot, m_top, g)
    pseudo_steps = 0

    lam = np.array(multiplier_components(phi, F, G, kappa, g))
    if max(stationarity_residual(phi, *lam, F, G, kappa, g)) > tol:
        params = SolverParams(dt=pseudo_dt, kappa=kappa, equilibrium_tol=pre_tol)
        traj = spectral_solver.run(
            State(phi=phi, time=init.time), params, F, G, g,
            t_end=pseudo_dt * pseudo_max_steps, max_steps=pseudo_max_steps,
        )
        phi = np.array(traj.final_state.phi)
        pseudo_steps = traj.steps
        logger.info("pseudo-time phase: %d steps, status %s", traj.steps, traj.status)
        lam = np.array(multiplier_components(phi, F, G, kappa, g))

    C = _constraint_matrix(g)
    mats = geo.stiffness_matrices(g)
    targets = np.array([m_bulk * g.omega_measure, m_bot * g.circle_length, m_top * g.circle_length])
    residual = _kkt_residual(phi, lam, targets, C, F, G, kappa, g)
    merit = float(np.linalg.norm(residual))
    res_bulk, res_surf = stationarity_residual(phi, *lam, F, G, kappa, g)
    verdict = "converged" if max(res_bulk, res_surf) <= tol else "stalled"
    iterations = 0

    while verdict != "converged" and iterations < max_iter:
        iterations += 1
        delta = spsolve(_kkt_jacobian(phi, C, mats, F, G, kappa, g), -residual)
        if not np.all(np.isfinite(delta)):
            logger.warning("Newton direction is not finite at iteration %d", iterations)
            break
        d_phi = delta[: g.size].reshape(g.shape)
        d_lam = delta[g.size :]
        step = 1.0
        for _ in range(_MAX_BACKTRACKS):
            trial_phi = phi + step * d_phi
            trial_lam = lam + step * d_lam
            trial = _kkt_residual(trial_phi, trial_lam, targets, C, F, G, kappa, g)
            trial_merit = float(np.linalg.norm(trial))
            if trial_merit < (1.0 - 1e-4 * step) * merit:
                break
            step *= 0.5
        else:
            logger.warning("Newton stalled at iteration %d (merit %.3e)", iterations, merit)
            break
        phi, lam, residual, merit = trial_phi, trial_lam, trial, trial_merit
        res_bulk, res_surf = stationarity_residual(phi, *lam, F, G, kappa, g)
        logger.info(
            "Newton %d: step %.3g, residual bulk %.3e surf %.3e", iterations, step, res_bulk, res_surf
        )
        if max(res_bulk, res_surf) <= tol:
            verdict = "converged"

    state = State(phi=phi, time=init.time)
    mass_error = max(
        abs(geo.bulk_mean(phi, g) - m_bulk),
        abs(geo.surface_mean(phi[0], g) - m_bot),
        abs(geo.surface_mean(phi[-1], g) - m_top),
    )
    if mass_error > MASS_TOL:
        logger.warning("mass constraints hold only to %.3e", mass_error)
    mean_value = multiplier_components(phi, F, G, kappa, g)
    logger.debug("KKT multipliers %s, mean-value multipliers %s", lam.tolist(), mean_value)
    return StationaryResult(
        state=state,
        lambda1=float(lam[0]),
        lambda2_bot=float(lam[1]),
        lambda2_top=float(lam[2]),
        residual_bulk=res_bulk,
        residual_surf=res_surf,
        iterations=iterations,
        verdict=verdict,
        energy=en.total_energy(state, F, G, kappa, g).e_total,
        pseudo_steps=pseudo_steps,
    )


def _relative_gap(a: tuple[float, float], b: tuple[float, float]) -> float:
    return max(abs(x - y) / max(abs(x), abs(y), 1.0) for x, y in zip(a, b))


def check_multipliers(r: StationaryResult, F: Potential, G: Potential, kappa: float, g: Grid) -> MultiplierCheck:
    """Compare KKT, mean-value and (when applicable) 2x2-system multipliers.

    When the bulk and surface masses coincide the 2x2 system is singular and
    the compatibility identity l2 = l1 <phi>_Omega is reported instead.
    """
    kkt = (r.lambda1, r.lambda2)
    mean_value = multipliers(r.state, F, G, kappa, g)
    gap = _relative_gap(kkt, mean_value)
    linear = None
    defect = None
    try:
        linear = multiplier_system(r.state, F, G, kappa, g)
        gap = max(gap, _relative_gap(kkt, linear), _relative_gap(mean_value, linear))
    except StationaryError as exc:
        logger.info("multiplier system skipped: %s", exc)
        l1, l2 = multiplier_moments(r.state.phi, F, G, kappa, g)
        defect = l2 - l1 * geo.bulk_mean(r.state.phi, g)
    return MultiplierCheck(
        kkt=kkt, mean_value=mean_value, linear_system=linear, compatibility_defect=defect, max_relative_gap=gap
    )


def criticality_defect(
    r: StationaryResult,
    F: Potential,
    G: Potential,
    kappa: float,
    g: Grid,
    n_directions: int = 20,
    seed: int = 0,
) -> float:
    """Largest |<E'(phi*), zeta>| over random unit mass-neutral directions zeta."""
    rng = np.random.Generator(np.random.Philox(seed))
    return max(
        abs(en.directional_derivative(r.state.phi, mass_neutral_direction(rng, g), F, G, kappa, g))
        for _ in range(n_directions)
    )


def _probe_trial(r, seed_seq, eps, t_probe, p, F, G, g) -> tuple[float, float]:
    rng = np.random.Generator(np.random.Philox(seed_seq))
    start = r.state.phi + eps * mass_neutral_direction(rng, g)
    excursion = [geo.product_norm(start - r.state.phi, g)]

    def watch(state, report, step_report):
        excursion.append(geo.product_norm(state.phi - r.state.phi, g))

    traj = spectral_solver.run(State(phi=start), p, F, G, g, t_end=t_probe, observers=(watch,))
    return max(excursion), traj.records[-1].report.e_total


def stability_probe(
    r: StationaryResult,
    n: int,
    eps: float,
    t_probe: float,
    p: SolverParams,
    F: Potential,
    G: Potential,
    g: Grid,
    seed: int = 0,
    escape_radius: float | None = None,
) -> StabilityVerdict:
    """Run ``n`` trajectories from mass-neutral perturbations of size ``eps`` (product norm).

    A trial escapes when its distance from the equilibrium reaches
    ``escape_radius`` (10 eps by default). The verdict also carries the
    largest excursion in units of eps, so tighter bounds can be read off.
    """
    if n < 1:
        raise StationaryError(f"need at least one trial, got {n}")
    if eps < 0:
        raise StationaryError(f"eps must be >= 0, got {eps}")
    if not r.converged:
        raise StationaryError("stability probing needs a converged equilibrium")
    radius = 10.0 * eps if escape_radius is None else escape_radius
    if eps == 0:
        return StabilityVerdict(
            n_trials=n, eps=0.0, escape_radius=radius, max_excursion=0.0, escaped=False,
            energy_comparison=0.0, note="zero perturbation",
        )

    seeds = np.random.SeedSequence(seed).spawn(n)

    def trial(s):
        return _probe_trial(r, s, eps, t_probe, p, F, G, g)

    if settings.SOLVER_WORKERS > 1:
        with ThreadPoolExecutor(max_workers=settings.SOLVER_WORKERS) as pool:
            outcomes = list(pool.map(trial, seeds))
    else:
        outcomes = [trial(s) for s in seeds]

    excursions = [e for e, _ in outcomes]
    finals = [energy for _, energy in outcomes]
    verdict = StabilityVerdict(
        n_trials=n,
        eps=eps,
        escape_radius=radius,
        max_excursion=max(excursions),
        relative_excursion=max(excursions) / eps,
        escaped=any(e >= radius for e in excursions),
        energy_comparison=min(finals) - r.energy,
        excursions=excursions,
        final_energies=finals,
        note=None if p.kappa > 0 else "kappa = 0: no stability expectation",
    )
    logger.info(
        "stability probe: %d trials, max excursion %.3e (radius %.1e), escaped=%s",
        n, verdict.max_excursion, radius, verdict.escaped,
    )
    return verdict

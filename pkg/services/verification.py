"""Desk-scale verification suite behind the ``verify`` command.

Each check builds its own small problem and returns a CheckOutcome; a check
that raises is reported as failed with the error message.
"""
import logging
from typing import Callable

import numpy as np

from core.errors import SimulationError
from models.state import State
from schemas.diagnostics import CheckOutcome
from schemas.solver import SolverParams
from services import diagnostics, spectral_solver
from services import geometry as geo
from services import stationary as st
from services.potentials import quartic_double_well
from services.runner import make_rng

logger = logging.getLogger(__name__)


def check_elliptic_order() -> CheckOutcome:
    orders = []
    for kappa in (0.01, 0.1, 1.0):
        report = diagnostics.manufactured_elliptic_test((16, 32, 64), kappa)
        orders += report.orders_phi + report.orders_psi
    worst = min(orders)
    return CheckOutcome(name="elliptic order", passed=worst >= 1.8, value=f"min order {worst:.3f}")


def check_mode_oracle(n_states: int = 3) -> CheckOutcome:
    g = geo.build_grid(8, 8, 4.0, 4.0)
    F = G = quartic_double_well()
    rng = make_rng(7)
    worst = 0.0
    for kappa in (0.0, 0.1):
        for alpha in (0.0, 0.1):
            p = SolverParams(dt=1e-2, kappa=kappa, alpha=alpha)
            for _ in range(n_states):
                s = State(phi=0.3 * rng.standard_normal(g.shape))
                forcing = F.d1(s.phi), np.stack([G.d1(s.psi_bot), G.d1(s.psi_top)])
                phi_fft, _, _ = spectral_solver.linear_update(s.phi, *forcing, p, g)
                phi_dense, _ = spectral_solver.dense_step(s, p, F, G, g)
                worst = max(worst, float(np.max(np.abs(phi_fft - phi_dense)) / np.max(np.abs(phi_dense))))
    return CheckOutcome(name="spectral vs dense step", passed=worst <= 1e-9, value=f"rel. gap {worst:.2e}")


def check_trivial_equilibrium() -> CheckOutcome:
    g = geo.build_grid(16, 16, 16.0, 16.0)
    F = G = quartic_double_well()
    s = State(phi=np.full(g.shape, 0.5))
    new, _ = spectral_solver.step(s, SolverParams(dt=1e-3), F, G, g)
    drift = float(np.max(np.abs(new.phi - s.phi)))
    r = st.solve_stationary(s, 0.5, 0.5, F, G, 0.1, g)
    gap = max(abs(r.lambda1 + 0.375), abs(r.lambda2 - 0.125))
    return CheckOutcome(
        name="trivial equilibrium",
        passed=drift <= 1e-12 and gap <= 1e-10 and r.iterations == 0,
        value=f"step drift {drift:.1e}, multiplier gap {gap:.1e}",
    )


def check_rate_fitter() -> CheckOutcome:
    t = np.linspace(0.0, 5.0, 200)
    power = diagnostics.fit_decay_rate(t, (1.0 + t) ** -2.0)
    expo = diagnostics.fit_decay_rate(t, np.exp(-3.0 * t))
    ok = (
        power.model == "power" and abs(power.exponent - 2.0) <= 1e-6 and abs(power.theta - 0.25) <= 1e-6
        and expo.model == "exponential" and abs(expo.exponent - 3.0) <= 1e-6
    )
    return CheckOutcome(
        name="decay-rate fitter", passed=ok, value=f"power {power.exponent:.6f}, exponential {expo.exponent:.6f}"
    )


def check_spinodal_invariants(steps: int = 200) -> CheckOutcome:
    g = geo.build_grid(16, 16, 16.0, 16.0)
    F = G = quartic_double_well()
    p = SolverParams(dt=1e-2, kappa=0.1)
    s0 = State(phi=0.01 * make_rng(0).uniform(-1.0, 1.0, g.shape))
    tr = spectral_solver.run(s0, p, F, G, g, t_end=steps * p.dt)
    conservation = diagnostics.check_conservation(tr)
    law = diagnostics.check_energy_law(tr)
    drift = max(conservation.drift_bulk, conservation.drift_bot, conservation.drift_top)
    return CheckOutcome(
        name="spinodal mass and energy",
        passed=conservation.passed and law.monotone,
        value=f"mass drift {drift:.1e}, worst uptick {law.runs[0].worst_uptick:.1e}",
    )


def check_h_minus_one() -> CheckOutcome:
    g = geo.build_grid(16, 16, 4.0, 2.0)
    X, _ = g.mesh
    f = np.cos(2 * np.pi * X / g.Lx)
    lam = (2.0 * np.sin(np.pi / g.Nx) / g.dx) ** 2
    expected = np.sqrt(0.5 * g.Lx * g.Ly / lam)
    got = diagnostics.h_minus_one_norm(f, g)
    rel = abs(got - expected) / expected
    return CheckOutcome(name="H^-1 proxy", passed=rel <= 1e-12, value=f"rel. error {rel:.1e}")


def check_multiplier_consistency() -> CheckOutcome:
    g = geo.build_grid(8, 8, 4.0, 4.0)
    F = G = quartic_double_well()
    X, Y = g.mesh
    init = State(phi=0.7 + 0.05 * np.cos(2 * np.pi * X / g.Lx) * np.cos(np.pi * Y / g.Ly))
    r = st.solve_stationary(init, 0.8, 0.6, F, G, 0.1, g)
    check = st.check_multipliers(r, F, G, 0.1, g)
    criticality = st.criticality_defect(r, F, G, 0.1, g)
    return CheckOutcome(
        name="multiplier consistency",
        passed=r.converged and check.linear_system is not None and check.max_relative_gap <= 1e-6 and criticality <= 1e-6,
        value=f"max gap {check.max_relative_gap:.1e}, criticality {criticality:.1e}",
    )


def _limit_finals(parameter: str, values, reference: float, t_end: float = 0.05):
    g = geo.build_grid(16, 16, 16.0, 16.0)
    F = G = quartic_double_well()
    X, Y = g.mesh
    s0 = State(
        phi=0.1 * np.cos(2 * np.pi * X / g.Lx) * np.cos(np.pi * Y / g.Ly) + 0.05 * np.cos(4 * np.pi * X / g.Lx)
    )
    base = {"dt": 1e-2, "kappa": 0.1, "alpha": 0.0}

    def final(value):
        p = SolverParams(**{**base, parameter: value})
        return spectral_solver.run(s0, p, F, G, g, t_end=t_end).final_state.phi

    return g, [final(v) for v in values], final(reference)


def check_alpha_limit() -> CheckOutcome:
    alphas = (0.2, 0.1, 0.05)
    g, finals, reference = _limit_finals("alpha", alphas, 0.0)
    report = diagnostics.cauchy_gaps(alphas, finals, reference, g)
    return CheckOutcome(
        name="alpha -> 0 limit",
        passed=report.passed,
        value=f"gaps {report.gaps[0]:.2e} -> {report.gaps[-1]:.2e}, successive {report.successive[0]:.2e} -> {report.successive[-1]:.2e}",
    )


def check_kappa_limit() -> CheckOutcome:
    kappas = (0.2, 0.1, 0.05)
    g, finals, reference = _limit_finals("kappa", kappas, 0.0)
    report = diagnostics.cauchy_gaps(kappas, finals, reference, g)
    return CheckOutcome(
        name="kappa -> 0 limit",
        passed=report.passed,
        value=f"gaps {report.gaps[0]:.2e} -> {report.gaps[-1]:.2e}, successive {report.successive[0]:.2e} -> {report.successive[-1]:.2e}",
    )


def check_stability_probe(n_trials: int = 8, eps: float = 1e-3) -> CheckOutcome:
    F = G = quartic_double_well()
    tiny = geo.build_grid(8, 8, 4.0, 4.0)
    stable = st.solve_stationary(State(phi=np.full(tiny.shape, 0.8)), 0.8, 0.8, F, G, 0.1, tiny)
    near = st.stability_probe(stable, n_trials, eps, 0.05, SolverParams(dt=1e-2, kappa=0.1), F, G, tiny)
    wide = geo.build_grid(16, 16, 16.0, 16.0)
    unstable = st.solve_stationary(State(phi=np.zeros(wide.shape)), 0.0, 0.0, F, G, 0.1, wide)
    away = st.stability_probe(unstable, n_trials, eps, 40.0, SolverParams(dt=0.5, kappa=0.1), F, G, wide)
    return CheckOutcome(
        name="stability probe",
        passed=near.max_excursion <= 5 * eps and away.escaped and away.energy_comparison < 0,
        value=f"stable {near.relative_excursion:.2f} eps, unstable {away.relative_excursion:.3g} eps",
    )


def check_continuous_dependence(t_end: float = 0.01) -> CheckOutcome:
    g = geo.build_grid(16, 16, 16.0, 16.0)
    F = G = quartic_double_well()
    p = SolverParams(dt=1e-3, kappa=0.1)
    rng = make_rng(11)
    s0 = State(phi=0.01 * rng.uniform(-1.0, 1.0, g.shape))
    zeta = st.mass_neutral_direction(rng, g)

    def run(phi):
        return spectral_solver.run(State(phi=phi), p, F, G, g, t_end=t_end, snapshot_every=1)

    base = run(s0.phi)
    finals = []
    for scale in (1e-6, 2e-6):
        report = diagnostics.perturbation_sensitivity(base, run(s0.phi + scale * zeta), g)
        finals.append(report.distances[-1])
    ratio = finals[1] / finals[0]
    return CheckOutcome(name="continuous dependence", passed=1.8 <= ratio <= 2.2, value=f"doubling ratio {ratio:.4f}")


CHECKS: tuple[Callable[[], CheckOutcome], ...] = (
    check_elliptic_order,
    check_mode_oracle,
    check_trivial_equilibrium,
    check_multiplier_consistency,
    check_rate_fitter,
    check_spinodal_invariants,
    check_alpha_limit,
    check_kappa_limit,
    check_stability_probe,
    check_continuous_dependence,
    check_h_minus_one,
)


def run_verification(checks=CHECKS) -> list[CheckOutcome]:
    outcomes = []
    for check in checks:
        try:
            outcome = check()
        except (SimulationError, ValueError, np.linalg.LinAlgError) as exc:
            logger.exception("check %s raised", check.__name__)
            outcome = CheckOutcome(name=check.__name__, passed=False, value="error", detail=str(exc))
        logger.info("%s: %s", outcome.name, "PASS" if outcome.passed else "FAIL")
        outcomes.append(outcome)
    return outcomes

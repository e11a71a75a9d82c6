"""Post-hoc checks on computed trajectories and solvers.

Every check is a pure function of its inputs and returns a report record;
none of them mutates a trajectory.
"""
import logging
from typing import Sequence

import numpy as np
import sympy as sp
from scipy.fft import dct

from core.errors import MassMismatch
from models.grid import BulkField, Grid
from models.potential import Potential
from models.state import State
from models.trajectory import Trajectory
from schemas.diagnostics import (
    CauchyGapReport,
    ConservationReport,
    ConvergenceReport,
    EllipticLevel,
    EnergyLawReport,
    EnergyLawRun,
    RateFit,
    SensitivityReport,
)
from services import geometry as geo
from services import spectral_solver
from services.stationary import multiplier_moments

logger = logging.getLogger(__name__)

TAIL_FRACTION = 0.05
ASYMPTOTIC_FRACTION = 0.5
NOISE_ULPS = 1e3
TAIL_SPREAD_FACTOR = 10.0


def check_conservation(tr: Trajectory, tol: float = 1e-12) -> ConservationReport:
    """Max drift of bulk and per-circle masses from the first record."""
    first_violation = None
    violated = None
    drifts = {}
    for name in ("m_bulk", "m_bot", "m_top"):
        series = tr.column(name)
        drift = np.abs(series - series[0])
        drifts[name] = float(drift.max()) if drift.size else 0.0
        bad = np.flatnonzero(drift > tol)
        if bad.size and (first_violation is None or bad[0] < first_violation):
            first_violation, violated = int(bad[0]), name
    if first_violation is not None:
        logger.warning("mass %s drifts beyond %.1e at record %d", violated, tol, first_violation)
    return ConservationReport(
        tol=tol,
        drift_bulk=drifts["m_bulk"],
        drift_bot=drifts["m_bot"],
        drift_top=drifts["m_top"],
        first_violation=first_violation,
        violated=violated,
    )


def _energy_law_run(tr: Trajectory, uptick_tol: float) -> EnergyLawRun:
    times = tr.times
    energy = tr.column("e_total")
    if len(times) < 2:
        return EnergyLawRun(
            dt=0.0, steps=0, monotone=True, worst_uptick=0.0, max_defect=0.0, mean_defect=0.0, min_d_visc=0.0
        )
    dts = np.diff(times)
    dissipation = tr.column("d_bulk")[1:] + tr.column("d_surf")[1:] + tr.column("d_visc")[1:]
    defect = np.abs(np.diff(energy) / dts + dissipation)
    upticks = np.diff(energy) / np.maximum(np.abs(energy[:-1]), np.finfo(float).tiny)
    worst = float(upticks.max())
    return EnergyLawRun(
        dt=float(np.median(dts)),
        steps=len(dts),
        monotone=worst <= uptick_tol,
        worst_uptick=worst,
        max_defect=float(defect.max()),
        mean_defect=float(np.sum(defect * dts) / np.sum(dts)),
        min_d_visc=float(tr.column("d_visc").min()),
    )


def check_energy_law(runs: Trajectory | Sequence[Trajectory], uptick_tol: float = 1e-10) -> EnergyLawReport:
    """Energy monotonicity per run and the dt-scaling of the discrete energy-identity defect.

    The defect of a step is |(E_{n+1} - E_n)/dt + d_bulk + d_surf + d_visc|
    with the dissipation of the new state; its time average over each run is
    compared between successive runs, which should use halved time steps.
    Records must be taken every step.
    """
    if isinstance(runs, Trajectory):
        runs = [runs]
    laws = [_energy_law_run(tr, uptick_tol) for tr in runs]
    ratios = []
    for coarse, fine in zip(laws, laws[1:]):
        if fine.mean_defect > 0:
            ratios.append(coarse.mean_defect / fine.mean_defect)
    return EnergyLawReport(runs=laws, ratios=ratios)


def _is_nonincreasing(values: np.ndarray) -> bool:
    return bool(np.all(np.diff(values) <= 1e-14 * np.maximum(np.abs(values[:-1]), 1.0)))


def fit_decay_rate(times, gaps, e_inf: float | None = None) -> RateFit:
    """Fit log gap = a - beta log(1+t) and log gap = a - r t; keep the better one.

    For the power law beta = 1/(1 - 2 theta), so theta = (1 - 1/beta)/2.
    Exponential decay corresponds to theta = 1/2.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(gaps, dtype=float)
    if t.shape != y.shape or t.size < 3:
        raise ValueError("need at least three (time, gap) samples of equal length")
    if np.any(y <= 0):
        raise ValueError("energy gaps must be positive")
    log_y = np.log(y)

    def fit(x):
        slope, intercept = np.polyfit(x, log_y, 1)
        rms = float(np.sqrt(np.mean((log_y - (slope * x + intercept)) ** 2)))
        return -float(slope), rms

    beta, power_rms = fit(np.log1p(t))
    rate, exp_rms = fit(t)
    tail = y[int(0.75 * y.size):]
    monotone_tail = _is_nonincreasing(tail)
    if not monotone_tail:
        logger.warning("energy gap tail is not monotone")

    if power_rms <= exp_rms:
        model, exponent, residual, other = "power", beta, power_rms, exp_rms
        theta = 0.5 * (1.0 - 1.0 / beta) if beta > 0 else None
    else:
        model, exponent, residual, other = "exponential", rate, exp_rms, power_rms
        theta = 0.5
    decaying = exponent > 1e-12 and y[-1] < y[0]
    if not decaying:
        logger.warning("energy gap is not decaying")
    return RateFit(
        model=model,
        exponent=exponent,
        residual=residual,
        theta=theta if decaying else None,
        other_residual=other,
        decaying=decaying,
        monotone_tail=monotone_tail,
        n_samples=int(t.size),
        e_inf=e_inf,
    )


def energy_gap_series(
    tr: Trajectory,
    tail_fraction: float = TAIL_FRACTION,
    asymptotic_fraction: float = ASYMPTOTIC_FRACTION,
) -> tuple[np.ndarray, np.ndarray, float]:
    """(times, E - E_inf, E_inf) with E_inf the mean energy of the last ``tail_fraction`` of samples.

    Gaps at or below the noise floor are dropped: a thousand ulps of E_inf, or
    ten times the spread of the tail, which bounds the bias of E_inf. Of the
    remaining samples only the last ``asymptotic_fraction`` of their time span
    is returned.
    """
    times = tr.times
    energy = tr.column("e_total")
    n_tail = max(1, int(round(tail_fraction * len(energy))))
    tail = energy[-n_tail:]
    e_inf = float(np.mean(tail))
    floor = max(
        NOISE_ULPS * np.finfo(float).eps * max(abs(e_inf), 1.0),
        TAIL_SPREAD_FACTOR * float(np.ptp(tail)),
    )
    head_t, gaps = times[:-n_tail], energy[:-n_tail] - e_inf
    keep = gaps > floor
    head_t, gaps = head_t[keep], gaps[keep]
    if head_t.size and asymptotic_fraction < 1.0:
        start = head_t[-1] - asymptotic_fraction * (head_t[-1] - head_t[0])
        late = head_t >= start
        head_t, gaps = head_t[late], gaps[late]
    logger.debug("energy gap series: %d samples above floor %.3e, E_inf=%.17g", head_t.size, floor, e_inf)
    return head_t, gaps, e_inf


def h_minus_one_norm(f: BulkField, g: Grid) -> float:
    """Discrete H^-1 seminorm sqrt(<f, L^-1 f>) with L the Neumann/periodic grid Laplacian.

    L is diagonalized by the full FFT in x and the DCT-I in y; the constant
    mode is excluded, so only the mean-free part of f contributes.
    """
    f = np.asarray(f, dtype=float)
    coeffs = np.fft.fft(dct(f, type=1, axis=0), axis=1)
    m = np.arange(g.Nx)
    k = np.arange(g.Ny + 1)
    lam_x = (2.0 * np.sin(np.pi * m / g.Nx) / g.dx) ** 2
    lam_y = (2.0 * np.sin(np.pi * k / (2 * g.Ny)) / g.dy) ** 2
    lam = lam_y[:, None] + lam_x[None, :]
    ends = np.ones(g.Ny + 1)
    ends[0] = ends[-1] = 2.0
    weight = np.zeros_like(lam)
    nonzero = lam > 0
    weight[nonzero] = 1.0 / (ends[:, None] * lam)[nonzero]
    total = np.sum(np.abs(coeffs) ** 2 * weight) * g.dx * g.dy / (2.0 * g.Nx * g.Ny)
    return float(np.sqrt(total))


def compatibility_defect(s: State, F: Potential, G: Potential, kappa: float, g: Grid) -> float:
    """l2 - l1 <phi>_Omega; vanishes at an equilibrium whose bulk and surface masses coincide."""
    l1, l2 = multiplier_moments(s.phi, F, G, kappa, g)
    return l2 - l1 * geo.bulk_mean(s.phi, g)


def cauchy_gaps(parameters: Sequence[float], finals: Sequence[BulkField], reference: BulkField, g: Grid, reference_parameter: float = 0.0) -> CauchyGapReport:
    """L2 gaps of terminal states to a limit run as a parameter decreases.

    ``parameters`` must be decreasing; ``finals[i]`` is the terminal field at
    ``parameters[i]``. Passes when the gaps to ``reference`` decrease strictly,
    the last gap is at most half the first, and the gaps between successive
    runs decrease strictly as well.
    """
    if len(parameters) != len(finals) or len(parameters) < 2:
        raise ValueError("need at least two runs with one terminal state each")
    gaps = [geo.bulk_l2_norm(np.asarray(f) - reference, g) for f in finals]
    successive = [geo.bulk_l2_norm(np.asarray(a) - np.asarray(b), g) for a, b in zip(finals, finals[1:])]
    return CauchyGapReport(
        parameters=list(parameters),
        reference=reference_parameter,
        gaps=gaps,
        successive=successive,
        monotone=all(b < a for a, b in zip(gaps, gaps[1:])),
        halved=gaps[-1] <= 0.5 * gaps[0],
        cauchy=all(b < a for a, b in zip(successive, successive[1:])),
    )


def _manufactured_data(Lx: float, Ly: float, kappa: float, exact: sp.Expr | None):
    x, y = sp.symbols("x y", real=True)
    phi = exact if exact is not None else sp.cos(2 * sp.pi * x / Lx) * sp.cos(sp.pi * y / Ly)
    h1 = -(sp.diff(phi, x, 2) + sp.diff(phi, y, 2))
    surface = -kappa * sp.diff(phi, x, 2) + phi
    dy = sp.diff(phi, y)
    # outward normal is -e_y at y = 0 and +e_y at y = Ly
    h2_bot = (surface - dy).subs(y, 0)
    h2_top = (surface + dy).subs(y, Ly)
    return x, y, phi, h1, h2_bot, h2_top


def _evaluate(expr, symbols, values, shape) -> np.ndarray:
    """Evaluate a sympy expression on grid arrays; constants broadcast to ``shape``."""
    return np.broadcast_to(sp.lambdify(symbols, expr, "numpy")(*values), shape).astype(float)


def manufactured_elliptic_test(
    resolutions: Sequence[int] = (16, 32, 64),
    kappa: float = 0.1,
    Lx: float = 2.0,
    Ly: float = 1.0,
    exact: sp.Expr | None = None,
) -> ConvergenceReport:
    """Max-norm errors and observed orders of the spectral elliptic solve.

    The data h1, h2 come from symbolic differentiation of ``exact`` (in the
    symbols x, y); by default cos(2 pi x/Lx) cos(pi y/Ly).
    """
    x, y, phi, h1, h2_bot, h2_top = _manufactured_data(Lx, Ly, kappa, exact)
    levels = []
    for n in resolutions:
        g = geo.build_grid(n, n, Lx, Ly)
        X, Y = g.mesh
        phi_exact = _evaluate(phi, (x, y), (X, Y), g.shape)
        h1_vals = _evaluate(h1, (x, y), (X, Y), g.shape)
        bot = _evaluate(h2_bot, (x,), (g.x,), (g.Nx,))
        top = _evaluate(h2_top, (x,), (g.x,), (g.Nx,))
        solved, residual = spectral_solver.solve_elliptic(h1_vals, bot, top, kappa, g)
        err = np.abs(solved - phi_exact)
        data_norm = float(np.max(np.abs(h1_vals)) + max(np.max(np.abs(bot)), np.max(np.abs(top))))
        error_phi = float(err.max())
        levels.append(
            EllipticLevel(
                n=n,
                error_phi=error_phi,
                error_psi=float(max(err[0].max(), err[-1].max())),
                data_norm=data_norm,
                stability_ratio=error_phi / data_norm if data_norm > 0 else 0.0,
                residual=residual,
            )
        )

    def orders(attr):
        out = []
        for coarse, fine in zip(levels, levels[1:]):
            a, b = getattr(coarse, attr), getattr(fine, attr)
            if a < 1e-13 or b < 1e-13:
                continue
            out.append(float(np.log(a / b) / np.log(fine.n / coarse.n)))
        return out

    report = ConvergenceReport(kappa=kappa, levels=levels, orders_phi=orders("error_phi"), orders_psi=orders("error_psi"))
    logger.info("manufactured elliptic test (kappa=%g): orders %s / %s", kappa, report.orders_phi, report.orders_psi)
    return report


def perturbation_sensitivity(
    run_a: Trajectory,
    run_b: Trajectory,
    g: Grid,
    mass_tol: float = 1e-12,
    max_growth_rate: float = 50.0,
) -> SensitivityReport:
    """H^-1 distance between two runs at aligned snapshots, relative to the initial distance."""
    snaps_a, snaps_b = run_a.snapshots, run_b.snapshots
    if len(snaps_a) != len(snaps_b) or not snaps_a:
        raise ValueError("runs must carry the same number of snapshots")
    first_a, first_b = snaps_a[0], snaps_b[0]
    for name, fa, fb in (
        ("bulk", geo.bulk_mean(first_a.phi, g), geo.bulk_mean(first_b.phi, g)),
        ("bottom", geo.surface_mean(first_a.psi_bot, g), geo.surface_mean(first_b.psi_bot, g)),
        ("top", geo.surface_mean(first_a.psi_top, g), geo.surface_mean(first_b.psi_top, g)),
    ):
        if abs(fa - fb) > mass_tol:
            raise MassMismatch(f"{name} masses differ: {fa:.17g} vs {fb:.17g}")
    times = []
    distances = []
    for a, b in zip(snaps_a, snaps_b):
        if abs(a.time - b.time) > 1e-12 * max(1.0, abs(a.time)):
            raise ValueError(f"snapshot times are not aligned: {a.time} vs {b.time}")
        times.append(a.time - first_a.time)
        distances.append(h_minus_one_norm(a.phi - b.phi, g))

    d0 = distances[0]
    exact_match = d0 == 0.0 and max(distances) == 0.0
    if d0 == 0.0:
        ratios = [1.0] * len(distances)
    else:
        ratios = [d / d0 for d in distances]
    growth = 0.0
    for t, ratio in zip(times, ratios):
        if t > 0 and ratio > 0:
            growth = max(growth, float(np.log(ratio) / t))
    bounded = bool(np.all(np.isfinite(ratios))) and growth <= max_growth_rate
    logger.info("perturbation sensitivity: final ratio %.6g, growth rate %.3g", ratios[-1], growth)
    return SensitivityReport(
        times=times, distances=distances, ratios=ratios, growth_rate=growth, exact_match=exact_match, bounded=bounded
    )

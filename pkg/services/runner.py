"""Run orchestration: RunSpec in, output directory with CSV, snapshots and reports out."""
import logging
from pathlib import Path

import numpy as np

from core.errors import ConfigError
from models.grid import Grid
from models.potential import Potential
from models.state import State
from schemas.run_spec import RunSpec
from services import diagnostics, output, reports, spectral_solver
from services import geometry as geo
from services import stationary as st
from services.potentials import potential_by_name

logger = logging.getLogger(__name__)


def make_rng(seed: int) -> np.random.Generator:
    """The single generator of a run: Philox counter-based bit generator keyed by ``seed``."""
    return np.random.Generator(np.random.Philox(seed))


def build_problem(spec: RunSpec) -> tuple[Grid, Potential, Potential]:
    g = geo.build_grid(spec.grid.Nx, spec.grid.Ny, spec.grid.Lx, spec.grid.Ly)
    F = potential_by_name(spec.model.bulk_potential, spec.model.bulk)
    G = potential_by_name(spec.model.surface_potential, spec.model.surface)
    return g, F, G


def initial_state(spec: RunSpec, g: Grid) -> State:
    init = spec.initial
    if init.kind == "constant":
        return State(phi=np.full(g.shape, init.mean))
    if init.kind == "random":
        rng = make_rng(spec.scheme.seed if init.seed is None else init.seed)
        return State(phi=init.mean + init.amplitude * rng.uniform(-1.0, 1.0, size=g.shape))
    state = output.read_snapshot(init.path)
    if state.phi.shape != g.shape:
        raise ConfigError(f"snapshot shape {state.phi.shape} does not match grid {g.shape}", key_path="initial.path")
    return state


def simulate(spec: RunSpec, out_dir: str | Path) -> dict:
    """Integrate, then write timeseries.csv, snapshots, final.txt and summary.txt."""
    g, F, G = build_problem(spec)
    p = spec.solver_params()
    s0 = initial_state(spec, g)
    out = output.run_directory(out_dir)
    logger.info("simulate '%s' into %s", spec.run.name, out)

    tr = spectral_solver.run(
        s0, p, F, G, g,
        t_end=spec.scheme.t_end,
        record_every=spec.scheme.record_every,
        snapshot_every=spec.scheme.snapshot_every,
    )
    output.write_timeseries(tr, out / "timeseries.csv")
    if spec.scheme.snapshot_every:
        for i, snap in enumerate(tr.snapshots):
            output.write_snapshot(snap, out / f"snapshot_{i:05d}.txt", g)
    output.write_snapshot(tr.final_state, out / "final.txt", g)

    conservation = diagnostics.check_conservation(tr)
    energy_law = diagnostics.check_energy_law(tr, spec.scheme.max_energy_uptick)
    rate = None
    times, gaps, e_inf = diagnostics.energy_gap_series(tr)
    if len(gaps) >= 3:
        rate = diagnostics.fit_decay_rate(times, gaps, e_inf=e_inf)
    output.append_report(reports.render_run_summary(spec, tr, conservation, energy_law, rate), out / "summary.txt")
    return {
        "name": spec.run.name,
        "status": tr.status,
        "steps": tr.steps,
        "energy": tr.records[-1].report.e_total,
        "directory": str(out),
        "passed": conservation.passed and energy_law.monotone,
    }


def stationary(spec: RunSpec, out_dir: str | Path) -> dict:
    """Solve for the equilibrium with the masses of the initial state and optionally probe it."""
    g, F, G = build_problem(spec)
    kappa = spec.model.kappa
    s0 = initial_state(spec, g)
    out = output.run_directory(out_dir)
    cfg = spec.stationary
    logger.info("stationary '%s' into %s", spec.run.name, out)

    result = st.solve_stationary(
        s0,
        geo.bulk_mean(s0.phi, g),
        (geo.surface_mean(s0.psi_bot, g), geo.surface_mean(s0.psi_top, g)),
        F, G, kappa, g,
        tol=cfg.tol,
        max_iter=cfg.max_iter,
        pre_tol=cfg.pre_tol,
        pseudo_dt=cfg.pseudo_dt,
        pseudo_max_steps=cfg.pseudo_max_steps,
    )
    check = st.check_multipliers(result, F, G, kappa, g)
    criticality = st.criticality_defect(result, F, G, kappa, g, seed=spec.scheme.seed)
    verdict = None
    if cfg.probe_trials and result.converged:
        verdict = st.stability_probe(
            result, cfg.probe_trials, cfg.probe_eps, cfg.probe_time, spec.solver_params(), F, G, g,
            seed=spec.scheme.seed,
        )
    output.write_snapshot(result.state, out / "equilibrium.txt", g)
    output.append_report(reports.render_stationary_report(spec, result, check, criticality, verdict), out / "stationary.txt")
    return {
        "name": spec.run.name,
        "status": result.verdict,
        "steps": result.iterations,
        "energy": result.energy,
        "directory": str(out),
        "passed": result.converged,
    }

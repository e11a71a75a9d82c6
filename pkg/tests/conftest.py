import numpy as np
import pytest

from core import config as core_config
from models.state import State
from schemas.solver import EnergyReport, SolverParams
from services import geometry as geo
from services import spectral_solver
from services.potentials import quartic_double_well


@pytest.fixture(scope="session", autouse=True)
def test_settings():
    # Local, single-process execution for tests
    core_config.settings.TESTING = True
    core_config.settings.USE_CELERY = False
    core_config.settings.SWEEP_WORKERS = 1
    core_config.settings.SOLVER_WORKERS = 1
    yield


@pytest.fixture()
def unit_grid():
    return geo.build_grid(64, 64, 1.0, 1.0)


@pytest.fixture()
def tiny_grid():
    return geo.build_grid(8, 8, 4.0, 4.0)


@pytest.fixture()
def spinodal_grid():
    """Large enough that the constant state 0 is linearly unstable."""
    return geo.build_grid(16, 16, 16.0, 16.0)


@pytest.fixture()
def quartic():
    return quartic_double_well()


@pytest.fixture()
def params():
    return SolverParams(dt=1e-2, kappa=0.1)


@pytest.fixture()
def rng():
    return np.random.Generator(np.random.Philox(1234))


@pytest.fixture()
def spinodal_state(spinodal_grid, rng):
    return State(phi=0.01 * rng.uniform(-1.0, 1.0, spinodal_grid.shape))


@pytest.fixture()
def smooth_state(spinodal_grid):
    X, Y = spinodal_grid.mesh
    g = spinodal_grid
    phi = 0.1 * np.cos(2 * np.pi * X / g.Lx) * np.cos(np.pi * Y / g.Ly) + 0.05 * np.cos(4 * np.pi * X / g.Lx)
    return State(phi=phi)


@pytest.fixture()
def make_report():
    def _make(t, e_total=1.0, m_bulk=0.0, m_bot=0.0, m_top=0.0, **dissipation):
        return EnergyReport(
            t=t, e_bulk=e_total, e_surf=0.0, e_total=e_total,
            m_bulk=m_bulk, m_bot=m_bot, m_top=m_top, **dissipation,
        )
    return _make


@pytest.fixture()
def minimal_config():
    return "[grid]\nNx = 8\nNy = 8\nLx = 4\nLy = 4\n[model]\nkappa = 0.1\n"


@pytest.fixture(scope="session")
def settled_spinodal():
    """Spinodal run on the 16 x 16 strip, relaxed until its dissipation speed is below 1e-7.

    Shared by the decay-rate and stability tests; returns (grid, potential, trajectory).
    """
    g = geo.build_grid(16, 16, 16.0, 16.0)
    F = quartic_double_well()
    phi = 0.01 * np.random.Generator(np.random.Philox(1234)).uniform(-1.0, 1.0, g.shape)
    p = SolverParams(dt=0.2, kappa=0.1, equilibrium_tol=1e-7)
    return g, F, spectral_solver.run(State(phi=phi), p, F, F, g, t_end=5000.0)

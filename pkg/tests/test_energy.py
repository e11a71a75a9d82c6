import numpy as np
import pytest

from core.errors import SolverError
from models.grid import Component
from models.state import ChemPotentials, State
from services import energy as en
from services import geometry as geo


class TestTotalEnergy:
    def test_zero_state(self, unit_grid, quartic):
        """phi = 0 on the unit strip: 1/4 in the bulk, 1/4 per unit of boundary."""
        report = en.total_energy(State(phi=np.zeros(unit_grid.shape)), quartic, quartic, 0.1, unit_grid)
        assert report.e_bulk == pytest.approx(0.25)
        assert report.e_surf == pytest.approx(0.5)
        assert report.e_total == pytest.approx(0.75)

    def test_pure_phase(self, unit_grid, quartic):
        """phi = 1 only pays the 1/2 psi^2 surface term."""
        report = en.total_energy(State(phi=np.ones(unit_grid.shape)), quartic, quartic, 0.1, unit_grid)
        assert report.e_total == pytest.approx(1.0)
        assert report.m_bulk == pytest.approx(1.0)
        assert report.m_bot == report.m_top == pytest.approx(1.0)

    def test_small_perturbations_change_energy_little(self, spinodal_grid, quartic, rng):
        """|E(eps zeta) - E(0)| stays below 10 eps."""
        zeta = rng.uniform(-1.0, 1.0, spinodal_grid.shape)
        e0 = en.total_energy(State(phi=np.zeros(spinodal_grid.shape)), quartic, quartic, 0.1, spinodal_grid).e_total
        for eps in (1e-3, 1e-4):
            e = en.total_energy(State(phi=eps * zeta), quartic, quartic, 0.1, spinodal_grid).e_total
            assert abs(e - e0) <= 10 * eps


class TestChemicalPotentials:
    def test_constant_state(self, unit_grid, quartic):
        """At phi = 0.5: mu = F'(0.5) and mu_Gamma = 0.5 + G'(0.5)."""
        s = State(phi=np.full(unit_grid.shape, 0.5))
        chem = en.chemical_potentials(s, s, quartic, quartic, 0.1, 0.0, 1e-3, unit_grid)
        assert np.allclose(chem.mu, -0.375, atol=1e-12)
        assert np.allclose(chem.mu_gamma_bot, 0.125, atol=1e-12)
        assert np.allclose(chem.mu_gamma(Component.TOP), 0.125, atol=1e-12)

    def test_bulk_potential_second_order(self, quartic):
        """mu on interior nodes converges at second order for a smooth field."""
        errors = []
        for n in (32, 64):
            g = geo.build_grid(n, n, 1.0, 1.0)
            X, Y = g.mesh
            phi = np.cos(2 * np.pi * X) * np.cos(np.pi * Y)
            s = State(phi=phi)
            exact = 5 * np.pi**2 * phi + phi**3 - phi
            chem = en.chemical_potentials(s, s, quartic, quartic, 0.1, 0.0, 1e-3, g)
            errors.append(np.max(np.abs(chem.mu[1:-1] - exact[1:-1])))
        assert 3.0 < errors[0] / errors[1] < 5.0

    def test_viscous_term_needs_positive_dt(self, tiny_grid, quartic):
        """alpha > 0 with dt = 0 cannot form the time derivative."""
        s = State(phi=np.zeros(tiny_grid.shape))
        with pytest.raises(SolverError, match="dt > 0"):
            en.chemical_potentials(s, s, quartic, quartic, 0.1, 0.5, 0.0, tiny_grid)


class TestDissipation:
    def test_constant_potentials(self, tiny_grid):
        """Constant chemical potentials dissipate nothing."""
        c = ChemPotentials(mu=np.full(tiny_grid.shape, 2.0), mu_gamma_bot=np.ones(8), mu_gamma_top=np.ones(8))
        assert en.dissipation(c, tiny_grid) == (0.0, 0.0)

    def test_sine_bulk_potential(self, unit_grid):
        """||grad sin(2 pi x)||^2 shows up as bulk dissipation only."""
        X, _ = unit_grid.mesh
        c = ChemPotentials(mu=np.sin(2 * np.pi * X), mu_gamma_bot=np.zeros(64), mu_gamma_top=np.zeros(64))
        d_bulk, d_surf = en.dissipation(c, unit_grid)
        assert d_bulk == pytest.approx(2 * np.pi**2, rel=2e-3)
        assert d_surf == 0.0


class TestFirstVariation:
    def test_matches_finite_differences(self, tiny_grid, quartic, rng):
        """<E'(phi), zeta> equals the centered difference quotient of E."""
        phi = 0.5 * rng.standard_normal(tiny_grid.shape)
        zeta = rng.standard_normal(tiny_grid.shape)
        h = 1e-6

        def energy(f):
            return en.total_energy(State(phi=f), quartic, quartic, 0.2, tiny_grid).e_total

        fd = (energy(phi + h * zeta) - energy(phi - h * zeta)) / (2 * h)
        exact = en.directional_derivative(phi, zeta, quartic, quartic, 0.2, tiny_grid)
        assert exact == pytest.approx(fd, rel=1e-6, abs=1e-8)

    def test_vanishes_at_the_wells(self, tiny_grid, quartic):
        """phi = 1 is critical in the bulk; the boundary rows carry psi + G'(psi) = 1."""
        grad = en.first_variation(np.ones(tiny_grid.shape), quartic, quartic, 0.1, tiny_grid)
        assert np.allclose(grad[1:-1], 0.0)
        assert np.allclose(grad[0], tiny_grid.dx)


class TestBoundaryFlux:
    def test_quadratic_profile(self, unit_grid, quartic):
        """With mu = -Lap phi + F'(phi) the flux of y^2 is the exact normal derivative."""
        _, Y = unit_grid.mesh
        phi = Y**2
        top = en.boundary_flux(phi, -2.0 + quartic.d1(phi[-1]), quartic, unit_grid, Component.TOP)
        bot = en.boundary_flux(phi, -2.0 + quartic.d1(phi[0]), quartic, unit_grid, Component.BOT)
        assert np.allclose(top, 2.0, atol=1e-10)
        assert np.allclose(bot, 0.0, atol=1e-10)

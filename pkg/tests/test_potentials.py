import numpy as np
import pytest

from core.errors import AssumptionViolation, PotentialError
from services import potentials as pot


class TestQuartic:
    def test_wells_and_barrier(self, quartic):
        """F(+-1) = 0, F'(0) = 0 and F''(0) = -1."""
        assert np.all(quartic.value(np.array([-1.0, 1.0])) == 0.0)
        assert quartic.d1(0.0) == 0.0
        assert quartic.d2(0.0) == -1.0
        assert quartic.value(0.0) == pytest.approx(0.25)

    def test_declared_constants(self, quartic):
        """Lower bound 0, curvature bound 1, quadratic growth of F''."""
        assert quartic.lower_bound == 0.0
        assert quartic.curvature_bound == 1.0
        assert quartic.growth_exp == 2.0


class TestContactLine:
    def test_neutral_angle(self):
        """At theta_s = pi/2 the sine term vanishes and G'' = -1."""
        G = pot.contact_line_surface(1.0, np.pi / 2)
        y = np.linspace(-3, 3, 7)
        assert np.allclose(G.d2(y), -1.0, atol=1e-14)
        assert np.allclose(G.value(y), -0.5 * y**2, atol=1e-14)

    def test_energy_density_is_bounded(self):
        """1/2 y^2 + G stays within gamma/2 in absolute value."""
        G = pot.contact_line_surface(2.0, 0.3)
        y = np.linspace(-50, 50, 10_001)
        assert np.max(np.abs(0.5 * y**2 + G.value(y))) <= np.cos(0.3) + 1e-12

    def test_gamma_must_be_positive(self):
        """gamma <= 0 is rejected."""
        with pytest.raises(PotentialError):
            pot.contact_line_surface(0.0, 0.5)


class TestDerivatives:
    """Test cases for the consistency of value, d1 and d2"""

    @pytest.mark.parametrize(
        "P",
        [pot.quartic_double_well(), pot.contact_line_surface(1.0, 1.2), pot.contact_line_surface(2.0, 2.5)],
        ids=["quartic", "contact_line", "contact_line_obtuse"],
    )
    def test_match_central_differences(self, P):
        """d1 and d2 agree with central differences of value and d1."""
        y = np.linspace(-2.0, 2.0, 41)
        h = 1e-5
        fd1 = (P.value(y + h) - P.value(y - h)) / (2 * h)
        fd2 = (P.d1(y + h) - P.d1(y - h)) / (2 * h)
        assert np.allclose(P.d1(y), fd1, rtol=1e-7, atol=1e-7)
        assert np.allclose(P.d2(y), fd2, rtol=1e-7, atol=1e-7)


class TestRegistry:
    def test_lookup(self):
        """Known names build potentials with their parameters."""
        assert pot.potential_by_name("quartic").name == "quartic"
        G = pot.potential_by_name("contact_line", {"gamma": 1.0, "theta_s": 0.5})
        assert G.params == {"gamma": 1.0, "theta_s": 0.5}

    def test_unknown_name(self):
        """Unknown names list the known ones."""
        with pytest.raises(PotentialError, match="quartic"):
            pot.potential_by_name("sextic")

    def test_bad_parameters(self):
        """Unexpected parameters are reported as PotentialError."""
        with pytest.raises(PotentialError):
            pot.potential_by_name("quartic", {"depth": 2.0})


class TestConvexSplit:
    def test_quartic_split(self, quartic):
        """F~ = 1/4 y^4 + 1/2 y^2 with F~(0) = F~'(0) = 0 and F~'' >= 1."""
        split = pot.convex_split(quartic)
        y = np.linspace(-4, 4, 101)
        assert np.allclose(split.tilde_value(y), 0.25 * y**4 + 0.5 * y**2)
        assert split.tilde_value(0.0) == 0.0
        assert split.tilde_d1(0.0) == 0.0
        assert np.all(split.tilde_d2(y) >= 1.0)
        assert np.all(y * split.tilde_d1(y) >= 0.0)


class TestValidateAssumptions:
    def test_quartic_pair_with_surface_diffusion(self, quartic):
        """Both quartics satisfy the lower-bound and growth checks when kappa > 0."""
        report = pot.validate_assumptions(quartic, quartic, kappa=0.1, samples=2000)
        assert report.failures() == []
        assert report.passed("A2", "F") and report.passed("A3", "G")

    def test_kappa_zero_needs_bounded_surface_curvature(self, quartic):
        """Without surface diffusion a quartic G violates the growth restriction."""
        report = pot.validate_assumptions(quartic, quartic, kappa=0.0, samples=2000)
        assert not report.passed("A3", "G")
        assert report.passed("A3", "F")

    def test_strict_raises(self, quartic):
        """strict=True turns the first failure into AssumptionViolation."""
        with pytest.raises(AssumptionViolation):
            pot.validate_assumptions(quartic, quartic, kappa=0.0, samples=2000, strict=True)

    def test_dominance_of_identical_potentials(self, quartic):
        """F dominated by itself gives rho1 = 1 and rho2 = 0."""
        report = pot.validate_assumptions(quartic, quartic, samples=2000, check_dominance=True)
        constants = report.constants("A4", "F,G")
        assert report.passed("A4")
        assert constants["rho1"] == pytest.approx(1.0, abs=1e-8)
        assert constants["rho2"] == pytest.approx(0.0, abs=1e-8)

    def test_sampling_limits(self, quartic):
        """Too few samples or a narrow range are rejected."""
        with pytest.raises(ValueError):
            pot.validate_assumptions(quartic, quartic, samples=10)
        with pytest.raises(ValueError):
            pot.validate_assumptions(quartic, quartic, range=(-1.0, 1.0), samples=2000)

import numpy as np
import pytest

from core.errors import GridError
from models.grid import Component
from services import geometry as geo


class TestBuildGrid:
    def test_unit_square_measures(self, unit_grid):
        """The unit strip has |Omega| = 1 and two circles of total length 2."""
        assert unit_grid.omega_measure == pytest.approx(1.0)
        assert unit_grid.gamma_measure == pytest.approx(2.0)
        assert unit_grid.shape == (65, 64)

    def test_spacings(self):
        """dx = Lx/Nx and dy = Ly/Ny."""
        g = geo.build_grid(8, 8, 2.0, 1.0)
        assert g.dx == 0.25
        assert g.dy == 0.125

    @pytest.mark.parametrize("Nx, Ny", [(10, 8), (4, 8), (8, 4), (0, 8)])
    def test_rejects_bad_counts(self, Nx, Ny):
        """Nx must be a power of two >= 8 and Ny >= 8."""
        with pytest.raises(GridError):
            geo.build_grid(Nx, Ny, 1.0, 1.0)

    @pytest.mark.parametrize("Lx, Ly", [(0.0, 1.0), (1.0, -1.0), (float("inf"), 1.0)])
    def test_rejects_bad_extents(self, Lx, Ly):
        """Extents must be finite and positive."""
        with pytest.raises(GridError):
            geo.build_grid(8, 8, Lx, Ly)

    def test_y_weights_sum_to_height(self, tiny_grid):
        """Trapezoid weights in y add up to Ly."""
        assert tiny_grid.y_weights.sum() == pytest.approx(tiny_grid.Ly)
        assert tiny_grid.bulk_weights.sum() == pytest.approx(tiny_grid.omega_measure)


class TestOperators:
    def test_laplacian_of_constant_vanishes(self, unit_grid):
        """A constant field has zero Laplacian on every interior node."""
        lap = geo.bulk_laplacian(np.full(unit_grid.shape, 3.0), unit_grid)
        assert np.all(lap[1:-1] == 0.0)
        assert np.all(np.isnan(lap[0])) and np.all(np.isnan(lap[-1]))

    def test_laplacian_of_quadratic(self, unit_grid):
        """The 5-point stencil is exact for y^2."""
        _, Y = unit_grid.mesh
        lap = geo.bulk_laplacian(Y**2, unit_grid)
        assert np.allclose(lap[1:-1], 2.0, atol=1e-9)

    def test_laplacian_second_order(self):
        """Refining the grid cuts the error on sin(2 pi x) by about four."""
        errors = []
        for n in (16, 32):
            g = geo.build_grid(n, n, 1.0, 1.0)
            X, _ = g.mesh
            f = np.sin(2 * np.pi * X)
            lap = geo.bulk_laplacian(f, g)
            errors.append(np.max(np.abs(lap[1:-1] + (2 * np.pi) ** 2 * f[1:-1])))
        assert 3.5 < errors[0] / errors[1] < 4.5

    def test_surface_laplacian_has_zero_sum(self, tiny_grid, rng):
        """Periodic second differences integrate to zero over a circle."""
        t = rng.standard_normal(tiny_grid.Nx)
        assert abs(geo.surface_laplacian(t, tiny_grid).sum()) < 1e-10
        assert np.all(geo.surface_laplacian(np.ones(tiny_grid.Nx), tiny_grid) == 0.0)

    def test_surface_laplacian_second_order(self):
        """On cos(2 pi x/Lx) the circle Laplacian converges at order two."""
        errors = []
        for n in (16, 32, 64):
            g = geo.build_grid(n, 4, 2.0, 1.0)
            x = g.x
            t = np.cos(2 * np.pi * x / g.Lx)
            exact = -(2 * np.pi / g.Lx) ** 2 * t
            errors.append(np.max(np.abs(geo.surface_laplacian(t, g) - exact)))
        orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
        assert np.all((orders > 1.9) & (orders < 2.1)), orders

    def test_operators_are_linear(self, tiny_grid, rng):
        """Each stencil maps a f + b h to a L(f) + b L(h)."""
        f, h = rng.standard_normal(tiny_grid.shape), rng.standard_normal(tiny_grid.shape)
        a, b = 1.7, -0.4
        lap = geo.bulk_laplacian
        assert np.allclose(lap(a * f + b * h, tiny_grid)[1:-1], a * lap(f, tiny_grid)[1:-1] + b * lap(h, tiny_grid)[1:-1])
        surf = geo.surface_laplacian
        assert np.allclose(surf(a * f[0] + b * h[0], tiny_grid), a * surf(f[0], tiny_grid) + b * surf(h[0], tiny_grid))
        for comp in Component:
            dn = geo.normal_derivative
            assert np.allclose(dn(a * f + b * h, tiny_grid, comp), a * dn(f, tiny_grid, comp) + b * dn(h, tiny_grid, comp))

    def test_normal_derivative_of_linear(self, unit_grid):
        """d_n y is +1 on the top circle and -1 on the bottom one."""
        _, Y = unit_grid.mesh
        assert np.allclose(geo.normal_derivative(Y, unit_grid, Component.TOP), 1.0, atol=1e-12)
        assert np.allclose(geo.normal_derivative(Y, unit_grid, Component.BOT), -1.0, atol=1e-12)

    def test_normal_derivative_of_quadratic(self, unit_grid):
        """d_n y^2 is 0 at y = 0 and 2 at y = 1."""
        _, Y = unit_grid.mesh
        assert np.allclose(geo.normal_derivative(Y**2, unit_grid, "bot"), 0.0, atol=1e-10)
        assert np.allclose(geo.normal_derivative(Y**2, unit_grid, "top"), 2.0, atol=1e-10)

    def test_shape_mismatch(self, unit_grid, tiny_grid):
        """Fields from another grid are rejected."""
        with pytest.raises(GridError):
            geo.bulk_laplacian(np.zeros(tiny_grid.shape), unit_grid)
        with pytest.raises(GridError):
            geo.surface_laplacian(np.zeros(3), unit_grid)


class TestQuadrature:
    def test_means(self, unit_grid):
        """Means of constants are the constants; a full cosine period averages out."""
        assert geo.bulk_mean(np.full(unit_grid.shape, 3.0), unit_grid) == pytest.approx(3.0)
        assert abs(geo.surface_mean(np.cos(2 * np.pi * unit_grid.x), unit_grid)) < 1e-14
        assert geo.boundary_mean(np.ones(64), np.full(64, 3.0), unit_grid) == pytest.approx(2.0)

    def test_gradient_norm_of_sine(self, unit_grid):
        """||grad sin(2 pi x)||^2 approaches (2 pi)^2 / 2 on the unit strip."""
        X, _ = unit_grid.mesh
        got = geo.bulk_grad_norm_sq(np.sin(2 * np.pi * X), unit_grid)
        assert got == pytest.approx((2 * np.pi) ** 2 / 2, rel=2e-3)

    def test_product_norm_of_ones(self, tiny_grid):
        """||1|| in L2(Omega) x L2(Gamma) is sqrt(|Omega| + |Gamma|)."""
        got = geo.product_norm(np.ones(tiny_grid.shape), tiny_grid)
        assert got == pytest.approx(np.sqrt(tiny_grid.omega_measure + tiny_grid.gamma_measure))


class TestStiffness:
    def test_quadratic_form_matches_gradient_norm(self, tiny_grid, rng):
        """f^T A_b f is exactly ||grad f||^2."""
        f = rng.standard_normal(tiny_grid.shape)
        a_bulk = geo.stiffness_matrices(tiny_grid)["A_bulk"]
        flat = f.ravel()
        assert flat @ (a_bulk @ flat) == pytest.approx(geo.bulk_grad_norm_sq(f, tiny_grid), rel=1e-12)

    def test_apply_matches_matrix(self, tiny_grid, rng):
        """The matrix-free stiffness equals the sparse matrix product."""
        f = rng.standard_normal(tiny_grid.shape)
        mats = geo.stiffness_matrices(tiny_grid)
        assert np.allclose(geo.bulk_stiffness_apply(f, tiny_grid).ravel(), mats["A_bulk"] @ f.ravel(), atol=1e-12)
        surf = np.zeros(tiny_grid.shape)
        surf[0] = geo.surface_stiffness_apply(f[0], tiny_grid)
        surf[-1] = geo.surface_stiffness_apply(f[-1], tiny_grid)
        assert np.allclose(surf.ravel(), mats["A_surf"] @ f.ravel(), atol=1e-12)

    def test_symmetric_with_constant_kernel(self, tiny_grid):
        """A_b is symmetric and annihilates constants."""
        a_bulk = geo.stiffness_matrices(tiny_grid)["A_bulk"].toarray()
        assert np.allclose(a_bulk, a_bulk.T)
        assert np.allclose(a_bulk @ np.ones(tiny_grid.size), 0.0, atol=1e-12)

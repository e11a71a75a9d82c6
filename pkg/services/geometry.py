"""Discrete operators and quadrature on the periodic strip.

One inner product is shared by every module: trapezoid weights in y times the
periodic rectangle rule in x for the bulk, plain dx sums on each boundary
circle. The stiffness operators below are the exact Hessians of the discrete
Dirichlet energies under that inner product, which is what makes the discrete
mass and energy laws exact rather than approximate.
"""
import logging

import numpy as np
import scipy.sparse as sps

from core.errors import GridError
from models.grid import BulkField, Component, Grid, TraceField

logger = logging.getLogger(__name__)


def build_grid(Nx: int, Ny: int, Lx: float, Ly: float) -> Grid:
    if int(Nx) != Nx or int(Ny) != Ny:
        raise GridError(f"node counts must be integers, got Nx={Nx}, Ny={Ny}")
    Nx, Ny = int(Nx), int(Ny)
    if Nx < 8 or Nx & (Nx - 1):
        raise GridError(f"Nx must be a power of two >= 8, got {Nx}")
    if Ny < 8:
        raise GridError(f"Ny must be >= 8, got {Ny}")
    if not (np.isfinite(Lx) and np.isfinite(Ly)) or Lx <= 0 or Ly <= 0:
        raise GridError(f"extents must be positive, got Lx={Lx}, Ly={Ly}")
    return Grid(Nx=Nx, Ny=Ny, Lx=float(Lx), Ly=float(Ly))


def _check_bulk(f: BulkField, g: Grid) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != g.shape:
        raise GridError(f"bulk field shape {f.shape} does not match grid {g.shape}")
    return f


def _check_trace(t: TraceField, g: Grid) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if t.shape != (g.Nx,):
        raise GridError(f"trace shape {t.shape} does not match Nx={g.Nx}")
    return t


def _dxx(t: np.ndarray, dx: float) -> np.ndarray:
    """Periodic second difference along the last axis."""
    return (np.roll(t, -1, axis=-1) - 2.0 * t + np.roll(t, 1, axis=-1)) / dx**2


def bulk_laplacian(f: BulkField, g: Grid) -> BulkField:
    """5-point Laplacian on interior rows; boundary rows are NaN (not defined)."""
    f = _check_bulk(f, g)
    out = np.full_like(f, np.nan)
    out[1:-1] = _dxx(f[1:-1], g.dx) + (f[2:] - 2.0 * f[1:-1] + f[:-2]) / g.dy**2
    return out


def surface_laplacian(t: TraceField, g: Grid) -> TraceField:
    return _dxx(_check_trace(t, g), g.dx)


def normal_derivative(f: BulkField, g: Grid, component: Component) -> TraceField:
    """Second-order one-sided derivative along the outward normal (-e_y at the bottom)."""
    f = _check_bulk(f, g)
    if Component(component) is Component.TOP:
        return (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * g.dy)
    return (3.0 * f[0] - 4.0 * f[1] + f[2]) / (2.0 * g.dy)


def bulk_integral(f: BulkField, g: Grid) -> float:
    return float(np.sum(g.bulk_weights * _check_bulk(f, g)))


def bulk_mean(f: BulkField, g: Grid) -> float:
    return bulk_integral(f, g) / g.omega_measure


def surface_integral(t: TraceField, g: Grid) -> float:
    return float(np.sum(_check_trace(t, g)) * g.dx)


def surface_mean(t: TraceField, g: Grid) -> float:
    """Mean over one circle."""
    return surface_integral(t, g) / g.circle_length


def boundary_mean(bot: TraceField, top: TraceField, g: Grid) -> float:
    """Mean over the whole boundary (both circles, weighted by length)."""
    return (surface_integral(bot, g) + surface_integral(top, g)) / g.gamma_measure


def bulk_grad_norm_sq(f: BulkField, g: Grid) -> float:
    """||grad f||^2 from forward differences: y-edges with dx*dy, x-edges with trapezoid weights."""
    f = _check_bulk(f, g)
    dfy = np.diff(f, axis=0) / g.dy
    dfx = (np.roll(f, -1, axis=1) - f) / g.dx
    return float(g.dx * g.dy * np.sum(dfy**2) + np.sum(g.bulk_weights * dfx**2))


def surface_grad_norm_sq(t: TraceField, g: Grid) -> float:
    t = _check_trace(t, g)
    return float(g.dx * np.sum(((np.roll(t, -1) - t) / g.dx) ** 2))


def bulk_l2_norm(f: BulkField, g: Grid) -> float:
    return float(np.sqrt(bulk_integral(np.asarray(f) ** 2, g)))


def product_norm(f: BulkField, g: Grid) -> float:
    """sqrt(||phi||^2_Omega + ||psi||^2_Gamma) for a bulk field and its own traces."""
    f = _check_bulk(f, g)
    return float(np.sqrt(bulk_integral(f**2, g) + surface_integral(f[0] ** 2, g) + surface_integral(f[-1] ** 2, g)))


def bulk_stiffness_apply(f: BulkField, g: Grid) -> BulkField:
    """A_b f: gradient of f -> 1/2 ||grad f||^2 (Neumann Laplacian times the weights)."""
    f = _check_bulk(f, g)
    ty = np.zeros_like(f)
    d = np.diff(f, axis=0) / g.dy
    ty[:-1] -= d
    ty[1:] += d
    return g.dx * ty - g.bulk_weights * _dxx(f, g.dx)


def surface_stiffness_apply(t: TraceField, g: Grid) -> TraceField:
    return -g.dx * surface_laplacian(t, g)


def _circulant_second_difference(g: Grid) -> sps.csr_matrix:
    n = g.Nx
    k = sps.diags([np.full(n, 2.0), np.full(n - 1, -1.0), np.full(n - 1, -1.0)], [0, -1, 1], format="lil")
    k[0, n - 1] = -1.0
    k[n - 1, 0] = -1.0
    return (k / g.dx**2).tocsr()


def _edge_stiffness_y(g: Grid) -> sps.csr_matrix:
    n = g.Ny + 1
    main = np.full(n, 2.0)
    main[0] = main[-1] = 1.0
    off = np.full(n - 1, -1.0)
    return (sps.diags([off, main, off], [-1, 0, 1]) / g.dy).tocsr()


def stiffness_matrices(g: Grid) -> dict[str, sps.csr_matrix]:
    """Sparse A_b, A_gamma, W_b, W_s on nodes flattened row-major from (Ny+1, Nx)."""
    eye_x = sps.identity(g.Nx, format="csr")
    kx = _circulant_second_difference(g)
    ends = np.zeros(g.Ny + 1)
    ends[0] = ends[-1] = 1.0
    a_bulk = g.dx * (sps.kron(_edge_stiffness_y(g), eye_x) + sps.kron(sps.diags(g.y_weights), kx))
    a_surf = g.dx * sps.kron(sps.diags(ends), kx)
    return {
        "A_bulk": a_bulk.tocsr(),
        "A_surf": a_surf.tocsr(),
        "W_bulk": sps.diags(g.bulk_weights.ravel()).tocsr(),
        "W_surf": sps.diags(g.dx * np.repeat(ends, g.Nx)).tocsr(),
    }


def boundary_mask(g: Grid) -> np.ndarray:
    mask = np.zeros(g.shape, dtype=bool)
    mask[0] = mask[-1] = True
    return mask

from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np
from numpy.typing import NDArray

# Nodal arrays: BulkField has shape (Ny+1, Nx), rows j = 0 and j = Ny are the
# boundary circles; a TraceField is one such row, shape (Nx,).
BulkField = NDArray[np.float64]
TraceField = NDArray[np.float64]


class Component(str, Enum):
    BOT = "bot"
    TOP = "top"


@dataclass(frozen=True)
class Grid:
    """Periodic strip [0, Lx) x [0, Ly] with boundary circles y = 0 and y = Ly."""

    Nx: int
    Ny: int
    Lx: float
    Ly: float

    @property
    def dx(self) -> float:
        return self.Lx / self.Nx

    @property
    def dy(self) -> float:
        return self.Ly / self.Ny

    @property
    def shape(self) -> tuple[int, int]:
        return (self.Ny + 1, self.Nx)

    @property
    def size(self) -> int:
        return (self.Ny + 1) * self.Nx

    @property
    def omega_measure(self) -> float:
        return self.Lx * self.Ly

    @property
    def circle_length(self) -> float:
        return self.Lx

    @property
    def gamma_measure(self) -> float:
        return 2.0 * self.Lx

    @cached_property
    def x(self) -> NDArray[np.float64]:
        return np.arange(self.Nx) * self.dx

    @cached_property
    def y(self) -> NDArray[np.float64]:
        return np.arange(self.Ny + 1) * self.dy

    @cached_property
    def mesh(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """(X, Y) nodal coordinates, each shaped like a BulkField."""
        return np.meshgrid(self.x, self.y)

    @cached_property
    def y_weights(self) -> NDArray[np.float64]:
        """Trapezoid weights in y; they sum to Ly."""
        w = np.full(self.Ny + 1, self.dy)
        w[0] = w[-1] = 0.5 * self.dy
        return w

    @cached_property
    def bulk_weights(self) -> BulkField:
        """Quadrature weight of every node in the bulk inner product."""
        return np.repeat(self.y_weights[:, None], self.Nx, axis=1) * self.dx

    @cached_property
    def modified_wavenumbers(self) -> NDArray[np.float64]:
        """Eigenvalues q_m of -D_xx on the rfft modes m = 0 .. Nx/2."""
        m = np.arange(self.Nx // 2 + 1)
        return (2.0 * np.sin(np.pi * m / self.Nx) / self.dx) ** 2

    def boundary_row(self, component: Component) -> int:
        return 0 if Component(component) is Component.BOT else self.Ny

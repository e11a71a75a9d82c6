from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray

ScalarFn = Callable[[ArrayLike], NDArray[np.float64]]


@dataclass(frozen=True)
class Potential:
    """Smooth potential with its first two derivatives and assumption constants.

    ``lower_bound`` C and ``curvature_bound`` C~ bound value >= -C and d2 >= -C~;
    ``growth_coeff`` and ``growth_exp`` bound |d2(y)| <= C^ (1 + |y|^p).
    """

    value: ScalarFn
    d1: ScalarFn
    d2: ScalarFn
    lower_bound: float
    curvature_bound: float
    growth_coeff: float
    growth_exp: float
    label: str
    name: str = ""
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ConvexSplit:
    """Potential shifted by (C~+1)/2 y^2 - P'(0) y - P(0): convex with curvature >= 1."""

    base: Potential

    @property
    def shift(self) -> float:
        return 0.5 * (self.base.curvature_bound + 1.0)

    @property
    def d1_at_zero(self) -> float:
        return float(self.base.d1(0.0))

    @property
    def value_at_zero(self) -> float:
        return float(self.base.value(0.0))

    def tilde_value(self, y: ArrayLike) -> NDArray[np.float64]:
        y = np.asarray(y, dtype=float)
        return self.base.value(y) + self.shift * y**2 - self.d1_at_zero * y - self.value_at_zero

    def tilde_d1(self, y: ArrayLike) -> NDArray[np.float64]:
        y = np.asarray(y, dtype=float)
        return self.base.d1(y) + 2.0 * self.shift * y - self.d1_at_zero

    def tilde_d2(self, y: ArrayLike) -> NDArray[np.float64]:
        y = np.asarray(y, dtype=float)
        return self.base.d2(y) + 2.0 * self.shift

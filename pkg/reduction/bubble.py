"""Aubin-Talenti bubbles, universal constants and the projected bubble."""

from dataclasses import dataclass
from functools import lru_cache
from typing import TYPE_CHECKING

import numpy as np
from scipy import integrate, special

from reduction.errors import InvalidDimensionError
from utils.logger import get_logger

logger = get_logger(__name__)

if TYPE_CHECKING:
    from reduction.green import GreenProvider

# Radial quadrature cut-off; the tail beyond it is integrated analytically
QUADRATURE_CUTOFF = 1.0e4
_QUADRATURE_BREAKS = (0.0, 1.0, 10.0, 100.0, 1.0e3, QUADRATURE_CUTOFF)


@dataclass(frozen=True)
class Dimension:
    """Space dimension of the problem"""
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 5:
            raise InvalidDimensionError(f"Dimension must be an integer >= 5, got {self.n}")

    @property
    def borderline(self) -> bool:
        """N = 5 is admitted, but the blow-up asymptotics are not reliable there"""
        return self.n == 5


@dataclass(frozen=True)
class BubbleParams:
    """Center x and scale lambda of a bubble U_{x, lambda}"""
    center: np.ndarray
    scale: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if not self.scale > 0:
            raise ValueError(f"Bubble scale must be positive, got {self.scale}")


@dataclass(frozen=True)
class UniversalConstants:
    """Dimension-determined constants of the reduced energy"""
    n: int
    omega_n: float
    c_n: float
    a_const: float
    b_const: float

    @property
    def green_factor(self) -> float:
        """Coefficient c_N of the fundamental solution c_N |x - y|^{2-N}"""
        return 1.0 / ((self.n - 2) * self.omega_n)

    @classmethod
    def for_dimension(cls, n: int) -> 'UniversalConstants':
        return _constants(int(n))


@lru_cache(maxsize=None)
def _constants(n: int) -> UniversalConstants:
    Dimension(n)
    return UniversalConstants(
        n=n,
        omega_n=sphere_area(n),
        c_n=bubble_normalization(n),
        a_const=constant_A(n),
        b_const=constant_B(n),
    )


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere S^{n-1} in R^n"""
    if n < 2:
        raise InvalidDimensionError(f"Sphere area needs n >= 2, got {n}")
    return float(2.0 * np.pi ** (n / 2.0) / special.gamma(n / 2.0))


def bubble_normalization(n: int) -> float:
    """C_N = (N(N-2))^{(N-2)/4}"""
    return float((n * (n - 2)) ** ((n - 2) / 4.0))


def bubble_value(p: BubbleParams, y: np.ndarray, n: int) -> np.ndarray:
    """
    Evaluate U_{x,lambda}(y) = C_N lambda^{(N-2)/2} / (1 + lambda^2 |y-x|^2)^{(N-2)/2}.

    Args:
        p (BubbleParams): bubble center and scale
        y (np.ndarray): one point of shape (N,) or a batch of shape (m, N)
        n (int): space dimension

    Returns:
        np.ndarray: bubble values, scalar-shaped for a single point
    """
    y = np.asarray(y, dtype=float)
    dist2 = np.sum((y - p.center) ** 2, axis=-1)
    half = (n - 2) / 2.0
    return bubble_normalization(n) * p.scale ** half / (1.0 + p.scale ** 2 * dist2) ** half


def constant_A(n: int) -> float:
    """A = int U_{0,1}^{(N+2)/(N-2)} through the flux identity A = (N-2) omega_N C_N."""
    if n < 5:
        raise InvalidDimensionError(f"Constant A is used for N >= 5 only, got {n}")
    return (n - 2) * sphere_area(n) * bubble_normalization(n)


def constant_B(n: int) -> float:
    """B = int U_{0,1}^2 = C_N^2 omega_N Beta(N/2, (N-4)/2) / 2; diverges for N <= 4."""
    if n < 5:
        raise InvalidDimensionError(f"Constant B diverges for N <= 4, got {n}")
    return bubble_normalization(n) ** 2 * sphere_area(n) * 0.5 * special.beta(n / 2.0, (n - 4) / 2.0)


def _radial_integral(integrand, tail: float) -> float:
    total = 0.0
    for lower, upper in zip(_QUADRATURE_BREAKS[:-1], _QUADRATURE_BREAKS[1:]):
        value, _ = integrate.quad(integrand, lower, upper, epsabs=0.0, epsrel=1e-13, limit=200)
        total += value
    return total + tail


def constant_A_by_quadrature(n: int) -> float:
    """Radial quadrature of int U_{0,1}^{(N+2)/(N-2)} with an analytic tail."""
    if n < 5:
        raise InvalidDimensionError(f"Constant A is used for N >= 5 only, got {n}")
    exponent = (n + 2) / 2.0
    r = QUADRATURE_CUTOFF
    # r^{N-1}(1+r^2)^{-(N+2)/2} = r^{-3}(1 - (N+2)/2 r^{-2} + ...)
    tail = 1.0 / (2.0 * r ** 2) - exponent / (4.0 * r ** 4)
    radial = _radial_integral(lambda s: s ** (n - 1) * (1.0 + s * s) ** (-exponent), tail)
    c_n = bubble_normalization(n)
    return sphere_area(n) * c_n ** ((n + 2) / (n - 2)) * radial


def constant_B_by_quadrature(n: int) -> float:
    """Radial quadrature of int U_{0,1}^2 with an analytic tail."""
    if n < 5:
        raise InvalidDimensionError(f"Constant B diverges for N <= 4, got {n}")
    r = QUADRATURE_CUTOFF
    # r^{N-1}(1+r^2)^{2-N} = r^{3-N}(1 - (N-2) r^{-2} + (N-2)(N-1)/2 r^{-4} - ...)
    tail = (r ** (4 - n) / (n - 4)
            - r ** (2 - n)
            + (n - 2) * (n - 1) / 2.0 * r ** (-n) / n)
    radial = _radial_integral(lambda s: s ** (n - 1) * (1.0 + s * s) ** (2 - n), tail)
    return sphere_area(n) * bubble_normalization(n) ** 2 * radial


def projected_bubble(p: BubbleParams, y: np.ndarray, g: 'GreenProvider') -> np.ndarray:
    """
    Leading-order projection PU(y) ~ U_{x,lambda}(y) - A lambda^{-(N-2)/2} H(x, y).

    The surrogate is accurate to O(lambda^{-(N-2)/2}); the exact harmonic projection
    would need a boundary-value solve.

    Args:
        p (BubbleParams): bubble center (interior) and scale
        y (np.ndarray): interior point (N,) or batch (m, N)
        g (GreenProvider): provider of the regular part H

    Returns:
        np.ndarray: projected bubble values
    """
    n = g.dimension
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    targets = np.atleast_2d(y)
    g.require_interior(p.center)
    for point in targets:
        g.require_interior(point)
    regular = g.regular_values(p.center, targets)
    values = bubble_value(p, targets, n) - constant_A(n) / p.scale ** ((n - 2) / 2.0) * regular
    logger.debug(f"Projected bubble at scale {p.scale:.4g} evaluated on {len(targets)} points")
    return values[0] if single else values

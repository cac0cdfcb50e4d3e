"""Quadrature rules on spheres S^{N-1}.

Rules return directions grouped in blocks of equal size with weights summing to
one inside each block, so a surface mean is the average of block estimates and
the spread of those estimates gives the standard error.
"""

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import roots_jacobi

from config.config import config
from reduction.bubble import sphere_area
from reduction.errors import GeometryError
from utils.random_sampler import DomainSampler

MONTE_CARLO_RULES = ("uniform", "design")
UNIFORM_BATCHES = 100


@dataclass(frozen=True)
class MonteCarlo:
    """Randomized rule; `uniform` draws independent Gaussian directions in equal
    batches, `design` rotates a degree-5 spherical design per block"""
    samples: int = 100000
    seed: int = 0
    rule: str = "uniform"

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError(f"samples must be positive, got {self.samples}")
        if self.rule not in MONTE_CARLO_RULES:
            raise ValueError(f"Unknown Monte Carlo rule '{self.rule}', expected one of {MONTE_CARLO_RULES}")


@dataclass(frozen=True)
class Product:
    """Gauss-Jacobi in the cosines of the polar angles, trapezoid in azimuth"""
    resolution: int = 8

    def __post_init__(self):
        if self.resolution < 1:
            raise ValueError(f"resolution must be positive, got {self.resolution}")


Scheme = Union[MonteCarlo, Product]


@dataclass(frozen=True)
class SurfaceEstimate:
    """Quadrature value with its standard error (zero for deterministic rules
    apart from the floating-point floor)"""
    value: float
    std_error: float

    def __float__(self) -> float:
        return float(self.value)


def design_points(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Degree-5 design on S^{n-1}: the 2n points +-e_k and the 2n(n-1) points
    (+-e_a +-e_b)/sqrt(2), exact for polynomials of degree at most five.

    Returns:
        tuple: directions (2n^2, n) and weights summing to one
    """
    axes = np.concatenate([np.eye(n), -np.eye(n)])
    diagonals = []
    for a in range(n):
        for b in range(a + 1, n):
            for sa in (1.0, -1.0):
                for sb in (1.0, -1.0):
                    point = np.zeros(n)
                    point[a], point[b] = sa, sb
                    diagonals.append(point / np.sqrt(2.0))
    points = np.concatenate([axes, np.array(diagonals)])
    weights = np.concatenate([
        np.full(2 * n, (4.0 - n) / (2.0 * n * (n + 2))),
        np.full(len(diagonals), 1.0 / (n * (n + 2))),
    ])
    return points, weights


def product_points(n: int, resolution: int) -> Tuple[np.ndarray, np.ndarray]:
    """Tensor product rule in hyperspherical coordinates, weights summing to one"""
    # polar angle k carries weight sin^{n-1-k}; in t = cos it is Jacobi with alpha = (n-2-k)/2
    polar = [roots_jacobi(resolution, (n - 2 - k) / 2.0, (n - 2 - k) / 2.0) for k in range(1, n - 1)]
    azimuths = 2.0 * np.pi * np.arange(2 * resolution) / (2 * resolution)

    grids = np.meshgrid(*[nodes for nodes, _ in polar], azimuths, indexing='ij')
    weight_grids = np.meshgrid(*[weights for _, weights in polar], np.ones(2 * resolution), indexing='ij')
    cosines = [grid.ravel() for grid in grids[:-1]]
    psi = grids[-1].ravel()
    weights = np.prod([grid.ravel() for grid in weight_grids], axis=0)

    points = np.empty((len(psi), n))
    sine_product = np.ones(len(psi))
    for k, t in enumerate(cosines):
        points[:, k] = sine_product * t
        sine_product = sine_product * np.sqrt(np.clip(1.0 - t * t, 0.0, None))
    points[:, n - 2] = sine_product * np.cos(psi)
    points[:, n - 1] = sine_product * np.sin(psi)
    return points, weights / weights.sum()


@dataclass(frozen=True)
class SphereQuadrature:
    """Quadrature on the sphere of radius theta around center.

    center and radius may be left unset on a template that verify_identities
    places on each pole.
    """
    center: Optional[np.ndarray] = None
    radius: Optional[float] = None
    scheme: Scheme = field(default_factory=MonteCarlo)

    def at(self, center, radius: Optional[float] = None) -> 'SphereQuadrature':
        return replace(self, center=np.asarray(center, dtype=float),
                       radius=self.radius if radius is None else radius)

    @property
    def area(self) -> float:
        n = len(self.center)
        return sphere_area(n) * self.radius ** (n - 1)

    def validate(self, g, other_poles: Sequence[np.ndarray] = ()):
        """
        Check that the closed ball fits in the domain and stays clear of other poles.

        Raises:
            GeometryError: if the sphere violates either condition
        """
        if self.center is None or self.radius is None:
            raise GeometryError("Quadrature sphere needs a center and a radius")
        if not self.radius > 0:
            raise GeometryError(f"Quadrature radius must be positive, got {self.radius}")
        distance = float(g.boundary_distance(self.center[None, :])[0])
        if self.radius >= distance:
            raise GeometryError(
                f"Sphere of radius {self.radius:.4g} at {self.center.tolist()} leaves the domain "
                f"(boundary distance {distance:.4g})"
            )
        for pole in other_poles:
            gap = float(np.linalg.norm(np.asarray(pole, dtype=float) - self.center))
            if gap > 0 and self.radius >= 0.5 * gap:
                raise GeometryError(
                    f"Sphere of radius {self.radius:.4g} is not below half the distance {gap:.4g} to pole {list(pole)}"
                )

    def blocks(self) -> Tuple[np.ndarray, np.ndarray]:
        """Unit directions (B, b, N) and per-block weights (B, b)"""
        n = len(self.center)
        scheme = self.scheme
        if isinstance(scheme, Product):
            points, weights = product_points(n, scheme.resolution)
            return points[None], weights[None]
        sampler = DomainSampler(scheme.seed)
        if scheme.rule == "design":
            base, base_weights = design_points(n)
            count = max(2, int(np.ceil(scheme.samples / len(base))))
            frames = sampler.rotations(count, n)
            points = np.einsum('pn,bmn->bpm', base, frames)
            return points, np.broadcast_to(base_weights, (count, len(base))).copy()
        size = max(1, int(np.ceil(scheme.samples / UNIFORM_BATCHES)))
        points = sampler.sphere_directions(UNIFORM_BATCHES * size, n).reshape(UNIFORM_BATCHES, size, n)
        return points, np.full((UNIFORM_BATCHES, size), 1.0 / size)


def estimate(block_values: np.ndarray, magnitude: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Mean and standard error over the last axis of block estimates.

    magnitude is the quadrature of the absolute integrand pieces; it sets a
    floor on the error for cancelling integrands.
    """
    blocks = block_values.shape[-1]
    value = block_values.mean(axis=-1)
    if blocks > 1:
        spread = block_values.std(axis=-1, ddof=1) / np.sqrt(blocks)
    else:
        spread = np.zeros_like(value)
    floor = 64.0 * np.finfo(float).eps * np.asarray(magnitude)
    return value, np.sqrt(spread ** 2 + floor ** 2)


def default_theta(g, pole) -> float:
    """Default radius: a fixed fraction of the boundary distance"""
    distance = float(g.boundary_distance(np.asarray(pole, dtype=float)[None, :])[0])
    return config.quadrature.theta_factor * distance

"""Boundary surfaces of smooth domains.

Both supported surfaces are star-shaped about their center, so a point p lies
inside exactly when its gauge |p - c| / r(u), u = (p - c) / |p - c|, is below one.
"""

from abc import ABC, abstractmethod

import numpy as np

from schemas.domain_schema import Boundary, EllipsoidBoundary, StarBoundary
from utils.random_sampler import DomainSampler

_REJECTION_BATCH = 4096


class BoundarySurface(ABC):
    """A closed surface around `center` parameterized by unit directions"""

    def __init__(self, center, dimension: int):
        self.center = np.asarray(center, dtype=float)
        self.dimension = dimension

    @abstractmethod
    def surface(self, directions: np.ndarray) -> np.ndarray:
        """Boundary offsets from the center for unit vectors, shape (m, N)"""

    @abstractmethod
    def gauge(self, points: np.ndarray) -> np.ndarray:
        """Scaled radius: below one inside, one on the boundary"""

    @property
    @abstractmethod
    def outer_radius(self) -> float:
        """Radius of a centered ball containing the domain"""

    @property
    @abstractmethod
    def inner_radius(self) -> float:
        """Radius of a centered ball inside the domain"""

    @abstractmethod
    def distance(self, points: np.ndarray) -> np.ndarray:
        """Lower estimate of the distance to the boundary, non-positive outside"""

    def points(self, directions: np.ndarray, dilation: float = 1.0) -> np.ndarray:
        return self.center + dilation * self.surface(directions)

    def sample(self, sampler: DomainSampler, count: int, margin: float) -> np.ndarray:
        """Uniform points with gauge at most 1 - margin, by rejection from the outer ball"""
        accepted = np.empty((0, self.dimension))
        while len(accepted) < count:
            trial = sampler.uniform_ball(_REJECTION_BATCH, self.dimension, (1.0 - margin) * self.outer_radius,
                                         self.center)
            accepted = np.vstack([accepted, trial[self.gauge(trial) <= 1.0 - margin]])
        return accepted[:count]


class EllipsoidSurface(BoundarySurface):

    def __init__(self, boundary: EllipsoidBoundary, dimension: int):
        super().__init__(boundary.center, dimension)
        self.semi_axes = np.asarray(boundary.semi_axes, dtype=float)

    def surface(self, directions: np.ndarray) -> np.ndarray:
        return self.semi_axes * directions

    def gauge(self, points: np.ndarray) -> np.ndarray:
        return np.linalg.norm((np.atleast_2d(points) - self.center) / self.semi_axes, axis=1)

    @property
    def outer_radius(self) -> float:
        return float(self.semi_axes.max())

    @property
    def inner_radius(self) -> float:
        return float(self.semi_axes.min())

    def distance(self, points: np.ndarray) -> np.ndarray:
        # the scaled copy plus a ball of radius (1 - s) * min axis stays inside
        return (1.0 - self.gauge(points)) * self.inner_radius

    def sample(self, sampler: DomainSampler, count: int, margin: float) -> np.ndarray:
        unit = sampler.uniform_ball(count, self.dimension, 1.0 - margin)
        return self.center + self.semi_axes * unit


class StarSurface(BoundarySurface):
    """r(u) = radius * (1 + sum_m a_m (u . d_m)^p_m)"""

    def __init__(self, boundary: StarBoundary, dimension: int):
        super().__init__(boundary.center, dimension)
        self.radius = float(boundary.radius)
        directions = np.array([m.direction for m in boundary.modes], dtype=float).reshape(-1, dimension)
        self.directions = directions / np.linalg.norm(directions, axis=1, keepdims=True)
        self.degrees = np.array([m.degree for m in boundary.modes], dtype=int)
        self.amplitudes = np.array([m.amplitude for m in boundary.modes], dtype=float)

        even = self.degrees % 2 == 0
        highest = np.where(even, np.maximum(self.amplitudes, 0.0), np.abs(self.amplitudes))
        lowest = np.where(even, np.minimum(self.amplitudes, 0.0), -np.abs(self.amplitudes))
        self._r_max = self.radius * (1.0 + highest.sum())
        self._r_min = self.radius * (1.0 + lowest.sum())
        # bound on the tangential gradient of r over the sphere
        slope = self.radius * float(np.sum(np.abs(self.amplitudes) * self.degrees))
        self._cos_min = self._r_min / np.hypot(self._r_min, slope)

    def radial(self, directions: np.ndarray) -> np.ndarray:
        cosines = directions @ self.directions.T
        return self.radius * (1.0 + (self.amplitudes * cosines ** self.degrees).sum(axis=1))

    def surface(self, directions: np.ndarray) -> np.ndarray:
        return self.radial(directions)[:, None] * directions

    def gauge(self, points: np.ndarray) -> np.ndarray:
        offsets = np.atleast_2d(points) - self.center
        lengths = np.linalg.norm(offsets, axis=1)
        units = offsets / np.where(lengths > 0, lengths, 1.0)[:, None]
        return np.where(lengths > 0, lengths / self.radial(units), 0.0)

    @property
    def outer_radius(self) -> float:
        return self._r_max

    @property
    def inner_radius(self) -> float:
        return self._r_min

    def distance(self, points: np.ndarray) -> np.ndarray:
        return (1.0 - self.gauge(points)) * self._r_min * self._cos_min


def boundary_surface(boundary: Boundary, dimension: int) -> BoundarySurface:
    """Surface object for a validated boundary description"""
    if isinstance(boundary, EllipsoidBoundary):
        return EllipsoidSurface(boundary, dimension)
    if isinstance(boundary, StarBoundary):
        return StarSurface(boundary, dimension)
    raise ValueError(f"Unknown boundary kind '{getattr(boundary, 'kind', None)}'")

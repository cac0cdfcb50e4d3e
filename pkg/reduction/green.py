"""Green's function providers.

Every provider splits G(x, y) = S(x, y) - H(x, y) with the fundamental solution
S(x, y) = |x - y|^{2-N} / ((N-2) omega_N) and exposes H, G and R(x) = H(x, x)
together with analytic first and second derivatives. Derivatives are returned as
jets for one pole x against a batch of targets y.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import numpy as np

from config.config import config
from reduction.bubble import sphere_area
from reduction.errors import DomainError, SingularityError
from schemas.domain_schema import BallShape, DisjointBallsShape, DomainSpec, SmoothShape
from utils.logger import get_logger
from utils.random_sampler import DomainSampler

logger = get_logger(__name__)


@dataclass
class GreenJet:
    """Values and derivatives of a two-point kernel for one pole and m targets.

    hess_xy[:, p, q] is the mixed derivative d/dx_p d/dy_q.
    """
    value: np.ndarray
    grad_x: Optional[np.ndarray] = None
    grad_y: Optional[np.ndarray] = None
    hess_xx: Optional[np.ndarray] = None
    hess_xy: Optional[np.ndarray] = None
    hess_yy: Optional[np.ndarray] = None

    _FIELDS = ("value", "grad_x", "grad_y", "hess_xx", "hess_xy", "hess_yy")

    def __sub__(self, other: 'GreenJet') -> 'GreenJet':
        parts = {}
        for name in self._FIELDS:
            mine, theirs = getattr(self, name), getattr(other, name)
            parts[name] = None if mine is None or theirs is None else mine - theirs
        return GreenJet(**parts)

    def __add__(self, other: 'GreenJet') -> 'GreenJet':
        parts = {}
        for name in self._FIELDS:
            mine, theirs = getattr(self, name), getattr(other, name)
            parts[name] = None if mine is None or theirs is None else mine + theirs
        return GreenJet(**parts)

    def masked(self, mask: np.ndarray) -> 'GreenJet':
        return GreenJet(**{
            name: None if getattr(self, name) is None else getattr(self, name)[mask]
            for name in self._FIELDS
        })

    @classmethod
    def zeros(cls, m: int, n: int, order: int) -> 'GreenJet':
        return cls(
            value=np.zeros(m),
            grad_x=np.zeros((m, n)) if order >= 1 else None,
            grad_y=np.zeros((m, n)) if order >= 1 else None,
            hess_xx=np.zeros((m, n, n)) if order >= 2 else None,
            hess_xy=np.zeros((m, n, n)) if order >= 2 else None,
            hess_yy=np.zeros((m, n, n)) if order >= 2 else None,
        )

    @classmethod
    def concatenate(cls, jets: List['GreenJet']) -> 'GreenJet':
        return cls(**{
            name: None if getattr(jets[0], name) is None
            else np.concatenate([getattr(j, name) for j in jets], axis=0)
            for name in cls._FIELDS
        })

    def scatter(self, mask: np.ndarray, part: 'GreenJet'):
        """Write `part` into the rows selected by `mask`"""
        for name in self._FIELDS:
            target = getattr(self, name)
            if target is not None:
                target[mask] = getattr(part, name)


@dataclass
class RobinEvaluation:
    """R(x) = H(x, x) with gradient and Hessian"""
    location: np.ndarray
    value: float
    gradient: np.ndarray
    hessian: np.ndarray
    near_boundary: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "location": self.location.tolist(),
            "value": float(self.value),
            "gradient": self.gradient.tolist(),
            "hessian": self.hessian.tolist(),
            "near_boundary": self.near_boundary,
        }


def singular_jet(x: np.ndarray, targets: np.ndarray, n: int, order: int = 2) -> GreenJet:
    """Jet of S(x, y) = c_N |x - y|^{2-N} for one pole x and targets y"""
    omega = sphere_area(n)
    d = x[None, :] - targets
    r2 = np.sum(d * d, axis=1)
    value = r2 ** (1.0 - n / 2.0) / ((n - 2) * omega)
    if order == 0:
        return GreenJet(value=value)
    r_n = r2 ** (-n / 2.0) / omega
    grad_x = -d * r_n[:, None]
    jet = GreenJet(value=value, grad_x=grad_x, grad_y=-grad_x)
    if order >= 2:
        eye = np.eye(n)[None, :, :]
        outer = d[:, :, None] * d[:, None, :]
        hess = -(r_n[:, None, None] * eye - n * (r_n / r2)[:, None, None] * outer)
        jet.hess_xx = hess
        jet.hess_yy = hess.copy()
        jet.hess_xy = -hess
    return jet


def ball_regular_jet(x: np.ndarray, targets: np.ndarray, center: np.ndarray, radius: float,
                     n: int, order: int = 2) -> GreenJet:
    """
    Regular part of the Dirichlet Green's function of a ball by the Kelvin image.

    With u = x - c, v = y - c and q = |u|^2 |v|^2 / rho^2 - 2 u.v + rho^2 the kernel is
    H(x, y) = c_N q^{-(N-2)/2}, which is symmetric and smooth for x, y in the ball.

    Args:
        x (np.ndarray): pole, shape (N,)
        targets (np.ndarray): targets, shape (m, N)
        center (np.ndarray): ball center
        radius (float): ball radius
        n (int): dimension
        order (int): 0 for values, 1 adds gradients, 2 adds Hessian blocks

    Returns:
        GreenJet: jet of H
    """
    c_n = 1.0 / ((n - 2) * sphere_area(n))
    m = (n - 2) / 2.0
    rho2 = radius * radius
    u = x - center
    v = targets - center[None, :]
    uu = float(u @ u)
    vv = np.sum(v * v, axis=1)
    uv = v @ u
    q = uu * vv / rho2 - 2.0 * uv + rho2
    value = c_n * q ** (-m)
    if order == 0:
        return GreenJet(value=value)

    d1 = -m * c_n * q ** (-m - 1.0)
    qx = 2.0 * vv[:, None] * u[None, :] / rho2 - 2.0 * v
    qy = 2.0 * uu * v / rho2 - 2.0 * u[None, :]
    jet = GreenJet(value=value, grad_x=d1[:, None] * qx, grad_y=d1[:, None] * qy)
    if order >= 2:
        d2 = m * (m + 1.0) * c_n * q ** (-m - 2.0)
        eye = np.eye(n)[None, :, :]
        jet.hess_xx = (d2[:, None, None] * qx[:, :, None] * qx[:, None, :]
                       + (d1 * 2.0 * vv / rho2)[:, None, None] * eye)
        jet.hess_yy = (d2[:, None, None] * qy[:, :, None] * qy[:, None, :]
                       + (d1 * 2.0 * uu / rho2)[:, None, None] * eye)
        qxy = 4.0 * u[None, :, None] * v[:, None, :] / rho2 - 2.0 * eye
        jet.hess_xy = d2[:, None, None] * qx[:, :, None] * qy[:, None, :] + d1[:, None, None] * qxy
    return jet


class GreenProvider(ABC):
    """Base class for Green's function providers of a bounded domain"""

    def __init__(self, spec: DomainSpec, name: str):
        self.name = name
        self.spec = spec
        self.dimension = spec.dimension
        self.logger = logger
        self.config = config
        self.boundary_margin = self.config.green.boundary_margin_factor * self.diameter

    # Geometry -----------------------------------------------------------

    @property
    @abstractmethod
    def diameter(self) -> float:
        """Diameter of the domain"""

    @property
    @abstractmethod
    def centroid(self) -> np.ndarray:
        """A reference point of the domain used for normalization"""

    @abstractmethod
    def boundary_distance(self, points: np.ndarray) -> np.ndarray:
        """Distance to the boundary, positive inside and non-positive outside"""

    @abstractmethod
    def component_of(self, points: np.ndarray) -> np.ndarray:
        """Index of the connected component containing each point, -1 outside"""

    @abstractmethod
    def sample_interior(self, sampler: DomainSampler, count: int, margin: float) -> np.ndarray:
        """Uniform interior points kept a relative `margin` away from the boundary"""

    @abstractmethod
    def _regular_jet(self, x: np.ndarray, targets: np.ndarray, order: int) -> GreenJet:
        """Jet of H for targets in the same component as x"""

    @property
    def component_count(self) -> int:
        return 1

    def sample_components(self, sampler: DomainSampler, components, margin: float) -> np.ndarray:
        """One interior point in each listed component, in order"""
        return self.sample_interior(sampler, len(components), margin)

    def contains(self, point) -> bool:
        return bool(self.boundary_distance(np.atleast_2d(point))[0] > 0)

    def require_interior(self, point) -> bool:
        """
        Check that a point lies inside the domain.

        Returns:
            bool: True when the point is within the near-boundary margin

        Raises:
            DomainError: if the point is on the boundary or outside
        """
        point = np.asarray(point, dtype=float)
        if point.shape != (self.dimension,):
            raise DomainError(f"Expected a point with {self.dimension} coordinates, got shape {point.shape}")
        distance = float(self.boundary_distance(point[None, :])[0])
        if distance <= 0:
            raise DomainError(f"Point {point.tolist()} is not inside the domain")
        if distance < self.boundary_margin:
            self.logger.warning(
                f"Point {point.tolist()} is within the boundary margin "
                f"({distance:.3g} < {self.boundary_margin:.3g})"
            )
            return True
        return False

    # Jets ---------------------------------------------------------------

    def regular_jet(self, x: np.ndarray, targets: np.ndarray, order: int = 2) -> GreenJet:
        """Jet of H(x, .) at targets; across components H equals S"""
        x = np.asarray(x, dtype=float)
        targets = np.atleast_2d(np.asarray(targets, dtype=float))
        same = self.component_of(targets) == self.component_of(x[None, :])[0]
        if same.all():
            return self._regular_jet(x, targets, order)
        jet = GreenJet.zeros(len(targets), self.dimension, order)
        if same.any():
            jet.scatter(same, self._regular_jet(x, targets[same], order))
        if (~same).any():
            jet.scatter(~same, singular_jet(x, targets[~same], self.dimension, order))
        return jet

    def regular_values(self, x: np.ndarray, targets: np.ndarray) -> np.ndarray:
        return self.regular_jet(x, targets, order=0).value

    def green_jet(self, x: np.ndarray, targets: np.ndarray, order: int = 2) -> GreenJet:
        """Jet of G(x, .) at targets, exactly zero across components"""
        x = np.asarray(x, dtype=float)
        targets = np.atleast_2d(np.asarray(targets, dtype=float))
        if np.any(np.all(targets == x[None, :], axis=1)):
            raise SingularityError(f"Green's function is singular at x = y = {x.tolist()}")
        same = self.component_of(targets) == self.component_of(x[None, :])[0]
        if same.all():
            return singular_jet(x, targets, self.dimension, order) - self._regular_jet(x, targets, order)
        jet = GreenJet.zeros(len(targets), self.dimension, order)
        if same.any():
            inside = targets[same]
            jet.scatter(same, singular_jet(x, inside, self.dimension, order)
                        - self._regular_jet(x, inside, order))
        return jet

    def _pair_jet(self, x, y, order: int) -> GreenJet:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        self.require_interior(x)
        self.require_interior(y)
        return self.green_jet(x, y[None, :], order)

    def green(self, x, y) -> float:
        """G(x, y) for distinct interior points"""
        return float(self._pair_jet(x, y, 0).value[0])

    def grad_x_green(self, x, y) -> np.ndarray:
        return self._pair_jet(x, y, 1).grad_x[0]

    def grad_y_green(self, x, y) -> np.ndarray:
        return self._pair_jet(x, y, 1).grad_y[0]

    def second_green(self, x, y, i: int, h: int, block: str = "xy") -> float:
        """Second partial of G; block selects d/dx_i d/dx_h, d/dx_i d/dy_h or d/dy_i d/dy_h"""
        blocks = {"xx": "hess_xx", "xy": "hess_xy", "yy": "hess_yy"}
        if block not in blocks:
            raise ValueError(f"Unknown derivative block '{block}', expected one of {sorted(blocks)}")
        jet = self._pair_jet(x, y, 2)
        return float(getattr(jet, blocks[block])[0, i, h])

    def robin(self, x) -> RobinEvaluation:
        """
        Robin function R(x) = H(x, x) with its gradient and Hessian.

        The gradient is (grad_x H + grad_y H)(x, x), which equals 2 grad_x H(x, x)
        for a symmetric kernel.
        """
        x = np.asarray(x, dtype=float)
        near = self.require_interior(x)
        jet = self._regular_jet(x, x[None, :], 2)
        mixed = jet.hess_xy[0]
        hessian = jet.hess_xx[0] + mixed + mixed.T + jet.hess_yy[0]
        return RobinEvaluation(
            location=x,
            value=float(jet.value[0]),
            gradient=jet.grad_x[0] + jet.grad_y[0],
            hessian=0.5 * (hessian + hessian.T),
            near_boundary=near,
        )

    def robin_value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        self.require_interior(x)
        return float(self._regular_jet(x, x[None, :], 0).value[0])


class ImageChargeProvider(GreenProvider):
    """Closed-form provider for a ball or a union of disjoint balls"""

    def __init__(self, spec: DomainSpec):
        shape = spec.shape
        if isinstance(shape, BallShape):
            balls = [shape]
        elif isinstance(shape, DisjointBallsShape):
            balls = list(shape.balls)
        else:
            raise ValueError(f"Image-charge provider needs balls, got shape '{shape.type}'")
        self.centers = np.array([b.center for b in balls], dtype=float)
        self.radii = np.array([b.radius for b in balls], dtype=float)
        super().__init__(spec, name="image_charge")
        self.logger.debug(f"Image-charge provider built for {len(self.radii)} ball(s) in R^{self.dimension}")

    @property
    def diameter(self) -> float:
        best = 2.0 * float(self.radii.max())
        for i in range(len(self.radii)):
            for j in range(i + 1, len(self.radii)):
                span = np.linalg.norm(self.centers[i] - self.centers[j]) + self.radii[i] + self.radii[j]
                best = max(best, float(span))
        return best

    @property
    def centroid(self) -> np.ndarray:
        return self.centers.mean(axis=0)

    def _distances(self, points: np.ndarray) -> np.ndarray:
        gaps = np.linalg.norm(points[:, None, :] - self.centers[None, :, :], axis=2)
        return self.radii[None, :] - gaps

    def boundary_distance(self, points: np.ndarray) -> np.ndarray:
        return self._distances(np.atleast_2d(points)).max(axis=1)

    def component_of(self, points: np.ndarray) -> np.ndarray:
        distances = self._distances(np.atleast_2d(points))
        index = distances.argmax(axis=1)
        return np.where(distances.max(axis=1) > 0, index, -1)

    @property
    def component_count(self) -> int:
        return len(self.radii)

    def sample_interior(self, sampler: DomainSampler, count: int, margin: float) -> np.ndarray:
        return self.sample_components(sampler, sampler.choice(count, self.radii ** self.dimension), margin)

    def sample_components(self, sampler: DomainSampler, components, margin: float) -> np.ndarray:
        which = np.asarray(components, dtype=int)
        points = np.empty((len(which), self.dimension))
        for b in range(len(self.radii)):
            chosen = which == b
            points[chosen] = sampler.uniform_ball(
                int(chosen.sum()), self.dimension, (1.0 - margin) * self.radii[b], self.centers[b]
            )
        return points

    def _regular_jet(self, x: np.ndarray, targets: np.ndarray, order: int) -> GreenJet:
        b = int(self.component_of(x[None, :])[0])
        return ball_regular_jet(x, targets, self.centers[b], float(self.radii[b]), self.dimension, order)


def make_provider(spec: DomainSpec, **overrides) -> GreenProvider:
    """
    Build the Green's function provider for a domain.

    Args:
        spec (DomainSpec): validated domain description
        **overrides: fit settings forwarded to the fundamental-solution provider

    Returns:
        GreenProvider: closed-form provider for balls, fitted provider for smooth shapes
    """
    try:
        if isinstance(spec.shape, SmoothShape):
            from reduction.mfs import FundamentalSolutionProvider
            return FundamentalSolutionProvider(spec, **overrides)
        return ImageChargeProvider(spec)
    except Exception as e:
        logger.error(f"Error building Green provider: {str(e)}")
        raise

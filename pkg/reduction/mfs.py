"""Method-of-fundamental-solutions provider for smooth star-shaped domains.

With the default `enclosing_ball` reference only the correction
K(x, .) = H(x, .) - H_ref(x, .) is fitted, where H_ref is the exact regular part
of the smallest centered ball enclosing the domain; with `none` H itself is
fitted against S(x, .). The fitted part is harmonic in the domain and is
represented as a sum of free-space kernels with poles on a dilated copy of the
boundary. The truncated SVD pseudo-inverse of the collocation matrix is factorized
once; the charges for a pole x and their x-derivatives are that pseudo-inverse
applied to analytic boundary data.

The held-out residual max |G(x, .)| on boundary points outside the fit is
absolute. Kernel content of degree D on the domain scales like (1 + offset)^{-D},
so the default offset keeps leakage above the fitted degrees small.
"""

import threading
from typing import Dict, Optional, Tuple

import numpy as np
from scipy import linalg

from reduction.boundary import boundary_surface
from reduction.bubble import sphere_area
from reduction.errors import FitFailureError
from reduction.green import GreenJet, GreenProvider, ball_regular_jet, singular_jet
from schemas.domain_schema import DomainSpec, SmoothShape
from utils.random_sampler import DomainSampler, sobol_directions

# Independent quasi-random streams for collocation, sources and held-out checks
_COLLOCATION_STREAM = 11
_SOURCE_STREAM = 23
_HOLDOUT_STREAM = 37


class FundamentalSolutionProvider(GreenProvider):
    """Fitted provider for a smooth domain given by an ellipsoidal or star-shaped boundary"""

    def __init__(self, spec: DomainSpec, fit_tolerance: Optional[float] = None,
                 holdout_points: Optional[int] = None, chunk_size: Optional[int] = None):
        shape = spec.shape
        if not isinstance(shape, SmoothShape):
            raise ValueError(f"Fundamental-solution provider needs a smooth shape, got '{shape.type}'")
        self.shape = shape
        self.surface = boundary_surface(shape.boundary, spec.dimension)
        self.center = self.surface.center
        super().__init__(spec, name="fundamental_solutions")

        green_cfg = self.config.green
        self.fit_tolerance = green_cfg.fit_tolerance if fit_tolerance is None else fit_tolerance
        self.chunk_size = green_cfg.chunk_size if chunk_size is None else chunk_size
        n_holdout = green_cfg.holdout_points if holdout_points is None else holdout_points
        self.reference_radius = self.surface.outer_radius if shape.reference == "enclosing_ball" else None
        self.omega = sphere_area(self.dimension)

        n = self.dimension
        self.collocation = self._boundary_points(shape.collocation_points, _COLLOCATION_STREAM)
        self.holdout = self._boundary_points(n_holdout, _HOLDOUT_STREAM)
        directions = sobol_directions(shape.mfs_sources, n, _SOURCE_STREAM)
        self.sources = self.surface.points(directions, dilation=1.0 + shape.mfs_offset)

        try:
            matrix = self._kernel(self.collocation)
            u, s, vt = linalg.svd(matrix, full_matrices=False)
            keep = s > green_cfg.svd_rcond * s[0]
            self.pseudo_inverse = (vt[keep].T / s[keep]) @ u[:, keep].T
            self.holdout_matrix = self._kernel(self.holdout)
            self.condition = float(s[0] / s[keep][-1])
        except Exception as e:
            self.logger.error(f"Error factorizing collocation matrix: {str(e)}")
            raise

        self._cache: Dict[bytes, Tuple[np.ndarray, np.ndarray, np.ndarray, float]] = {}
        self._lock = threading.Lock()
        self.logger.info(
            f"Fundamental-solution provider ({shape.boundary.kind}, reference {shape.reference}): "
            f"{shape.mfs_sources} sources at offset {shape.mfs_offset:g}, "
            f"{shape.collocation_points} collocation points, rank {int(keep.sum())}, "
            f"condition {self.condition:.3g}"
        )

    def __getstate__(self):
        state = self.__dict__.copy()
        state.pop("_lock", None)
        state["_cache"] = {}
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._lock = threading.Lock()

    # Geometry -----------------------------------------------------------

    @property
    def diameter(self) -> float:
        return 2.0 * self.surface.outer_radius

    @property
    def centroid(self) -> np.ndarray:
        return self.center

    def boundary_distance(self, points: np.ndarray) -> np.ndarray:
        return self.surface.distance(points)

    def component_of(self, points: np.ndarray) -> np.ndarray:
        return np.where(self.surface.gauge(points) < 1.0, 0, -1)

    def sample_interior(self, sampler: DomainSampler, count: int, margin: float) -> np.ndarray:
        return self.surface.sample(sampler, count, margin)

    def _boundary_points(self, count: int, stream: int) -> np.ndarray:
        return self.surface.points(sobol_directions(count, self.dimension, stream))

    # Fit ----------------------------------------------------------------

    def _kernel(self, points: np.ndarray) -> np.ndarray:
        d = points[:, None, :] - self.sources[None, :, :]
        r2 = np.sum(d * d, axis=2)
        return r2 ** (1.0 - self.dimension / 2.0) / ((self.dimension - 2) * self.omega)

    def _reference_jet(self, x: np.ndarray, targets: np.ndarray, order: int) -> GreenJet:
        if self.reference_radius is None:
            return GreenJet.zeros(len(targets), self.dimension, order)
        return ball_regular_jet(x, targets, self.center, self.reference_radius, self.dimension, order)

    def _reference_green(self, x: np.ndarray, targets: np.ndarray, order: int) -> GreenJet:
        return singular_jet(x, targets, self.dimension, order) - self._reference_jet(x, targets, order)

    def charges(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
        """
        Fitted charges for pole x and their derivatives in x.

        Returns:
            tuple: (c, dc, d2c, residual) with shapes (S,), (N, S), (N, N, S) and the
            absolute boundary residual on held-out points
        """
        key = np.asarray(x, dtype=float).tobytes()
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        fitted = self._fit_pole(np.asarray(x, dtype=float))
        with self._lock:
            return self._cache.setdefault(key, fitted)

    def _fit_pole(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
        data = self._reference_green(x, self.collocation, 2)
        c = self.pseudo_inverse @ data.value
        dc = np.einsum('sk,kp->ps', self.pseudo_inverse, data.grad_x)
        d2c = np.einsum('sk,kpq->pqs', self.pseudo_inverse, data.hess_xx)

        held = self._reference_green(x, self.holdout, 0).value
        residual = float(np.abs(held - self.holdout_matrix @ c).max())
        if residual > self.fit_tolerance:
            self.logger.error(f"Fit residual {residual:.3g} above tolerance {self.fit_tolerance:.3g} for pole {x.tolist()}")
            raise FitFailureError(
                f"Boundary residual {residual:.3g} exceeds tolerance {self.fit_tolerance:.3g}",
                residual=residual,
            )
        self.logger.debug(f"Pole {x.tolist()} fitted with boundary residual {residual:.3g}")
        return c, dc, d2c, residual

    def boundary_residual(self, x) -> float:
        """max |G(x, .)| on held-out boundary points"""
        x = np.asarray(x, dtype=float)
        self.require_interior(x)
        return self.charges(x)[3]

    # Jets ---------------------------------------------------------------

    def _regular_jet(self, x: np.ndarray, targets: np.ndarray, order: int) -> GreenJet:
        if len(targets) > self.chunk_size:
            parts = [self._regular_jet(x, targets[i:i + self.chunk_size], order)
                     for i in range(0, len(targets), self.chunk_size)]
            return GreenJet.concatenate(parts)

        n = self.dimension
        c, dc, d2c, _ = self.charges(x)
        jet = self._reference_jet(x, targets, order)

        d = targets[:, None, :] - self.sources[None, :, :]
        r2 = np.sum(d * d, axis=2)
        phi = r2 ** (1.0 - n / 2.0) / ((n - 2) * self.omega)
        jet.value = jet.value + phi @ c
        if order == 0:
            return jet

        r_n = r2 ** (-n / 2.0) / self.omega
        grad_phi = -d * r_n[:, :, None]
        jet.grad_x = jet.grad_x + phi @ dc.T
        jet.grad_y = jet.grad_y + np.einsum('s,msq->mq', c, grad_phi)
        if order >= 2:
            jet.hess_xx = jet.hess_xx + np.einsum('ms,pqs->mpq', phi, d2c)
            jet.hess_xy = jet.hess_xy + np.einsum('ps,msq->mpq', dc, grad_phi)
            weights = c[None, :] * r_n
            isotropic = -weights.sum(axis=1)[:, None, None] * np.eye(n)[None, :, :]
            jet.hess_yy = jet.hess_yy + isotropic + n * np.einsum('ms,msp,msq->mpq', weights / r2, d, d)
        return jet

"""Reduced energy Psi_k, its derivatives and the interaction matrix M_k.

    Psi_k(a, lam) = A^2 <M_k(a) lam^{(N-2)/2}, lam^{(N-2)/2}> - B sum_j lam_j^2

with M_k(a)_jj = R(a_j) and M_k(a)_jl = -G(a_j, a_l). Off-diagonal entries use the
symmetrized kernel (G(a_j, a_l) + G(a_l, a_j)) / 2 so that fitted providers still
give a symmetric matrix and exact derivatives of the implemented function.
"""

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from scipy import linalg

from reduction.bubble import UniversalConstants
from reduction.errors import SingularityError
from reduction.green import GreenProvider


@dataclass(frozen=True)
class PeakConfig:
    """Peak locations a_1..a_k (shape (k, N)) and scales lambda_1..lambda_k"""
    points: np.ndarray
    scales: np.ndarray

    def __post_init__(self):
        points = np.atleast_2d(np.asarray(self.points, dtype=float))
        scales = np.atleast_1d(np.asarray(self.scales, dtype=float))
        if len(points) != len(scales):
            raise ValueError(f"Got {len(points)} points but {len(scales)} scales")
        if np.any(~(scales > 0)):
            raise ValueError(f"Scales must be positive, got {scales.tolist()}")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "scales", scales)

    @property
    def k(self) -> int:
        return len(self.scales)

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def min_separation(self) -> float:
        if self.k < 2:
            return np.inf
        gaps = np.linalg.norm(self.points[:, None, :] - self.points[None, :, :], axis=2)
        return float(gaps[np.triu_indices(self.k, 1)].min())

    def permuted(self, order) -> 'PeakConfig':
        order = np.asarray(order)
        return PeakConfig(self.points[order], self.scales[order])

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.points.ravel(), self.scales])

    @classmethod
    def from_vector(cls, z: np.ndarray, k: int, n: int) -> 'PeakConfig':
        return cls(z[:k * n].reshape(k, n), z[k * n:])

    def to_dict(self) -> Dict:
        return {"points": self.points.tolist(), "scales": self.scales.tolist()}


@dataclass
class InteractionMatrix:
    """Symmetric k x k interaction matrix with its smallest eigenvalue"""
    entries: np.ndarray
    smallest_eigenvalue: float

    @property
    def norm(self) -> float:
        return float(np.abs(linalg.eigvalsh(self.entries)).max())


@dataclass
class _Interactions:
    """Robin and pairwise Green data of a configuration"""
    robin: np.ndarray            # (k,)
    robin_grad: np.ndarray       # (k, N)
    robin_hess: np.ndarray       # (k, N, N)
    green: np.ndarray            # (k, k) symmetrized, zero diagonal
    green_grad: np.ndarray       # (k, k, N): d/da_j of Gs(a_j, a_l)
    green_hess_self: np.ndarray  # (k, k, N, N): d2/da_j2 of Gs(a_j, a_l)
    green_hess_pair: np.ndarray  # (k, k, N, N): d2/da_j da_l of Gs(a_j, a_l)


def _interactions(g: GreenProvider, points: np.ndarray, order: int) -> _Interactions:
    k, n = points.shape
    robin = np.zeros(k)
    robin_grad = np.zeros((k, n))
    robin_hess = np.zeros((k, n, n))
    raw = np.zeros((k, k))
    raw_grad_x = np.zeros((k, k, n))
    raw_grad_y = np.zeros((k, k, n))
    raw_xx = np.zeros((k, k, n, n))
    raw_xy = np.zeros((k, k, n, n))
    raw_yy = np.zeros((k, k, n, n))

    for j in range(k):
        if order == 0:
            robin[j] = g.robin_value(points[j])
        else:
            evaluation = g.robin(points[j])
            robin[j] = evaluation.value
            robin_grad[j] = evaluation.gradient
            robin_hess[j] = evaluation.hessian
        others = [l for l in range(k) if l != j]
        if not others:
            continue
        if np.any(np.all(points[others] == points[j], axis=1)):
            raise SingularityError(f"Coincident peak locations at {points[j].tolist()}")
        jet = g.green_jet(points[j], points[others], order=order)
        raw[j, others] = jet.value
        if order >= 1:
            raw_grad_x[j, others] = jet.grad_x
            raw_grad_y[j, others] = jet.grad_y
        if order >= 2:
            raw_xx[j, others] = jet.hess_xx
            raw_xy[j, others] = jet.hess_xy
            raw_yy[j, others] = jet.hess_yy

    swap = (1, 0, 2)
    return _Interactions(
        robin=robin,
        robin_grad=robin_grad,
        robin_hess=robin_hess,
        green=0.5 * (raw + raw.T),
        green_grad=0.5 * (raw_grad_x + raw_grad_y.transpose(swap)),
        green_hess_self=0.5 * (raw_xx + raw_yy.transpose(1, 0, 2, 3)),
        green_hess_pair=0.5 * (raw_xy + raw_xy.transpose(1, 0, 3, 2)),
    )


def m_matrix(g: GreenProvider, points: np.ndarray) -> InteractionMatrix:
    """
    Assemble M_k with Robin values on the diagonal and -G off the diagonal.

    Args:
        g (GreenProvider): Green's function provider
        points (np.ndarray): k interior points, shape (k, N)

    Returns:
        InteractionMatrix: entries and smallest eigenvalue

    Raises:
        SingularityError: if two points coincide
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    data = _interactions(g, points, order=0)
    entries = np.diag(data.robin) - data.green
    return InteractionMatrix(entries=entries, smallest_eigenvalue=float(linalg.eigvalsh(entries)[0]))


def is_positive(m: InteractionMatrix, tol: Optional[float] = None) -> bool:
    """True iff the smallest eigenvalue exceeds tol (default 1e-10 * ||M||)"""
    if tol is None:
        tol = 1e-10 * m.norm
    return bool(m.smallest_eigenvalue > tol)


def psi_derivatives(g: GreenProvider, c: PeakConfig, consts: UniversalConstants,
                    order: int = 2) -> Tuple[float, Optional[np.ndarray], Optional[np.ndarray]]:
    """
    Value, gradient and Hessian of Psi_k in one pass.

    Layout: the kN position coordinates peak-major, then the k scales.

    Returns:
        tuple: (value, gradient or None, Hessian or None)
    """
    k, n = c.k, c.dimension
    lam = c.scales
    half = (n - 2) / 2.0
    mu = lam ** half
    a2 = consts.a_const ** 2
    b = consts.b_const

    data = _interactions(g, c.points, order)
    matrix = np.diag(data.robin) - data.green
    m_mu = matrix @ mu
    value = a2 * float(mu @ m_mu) - b * float(lam @ lam)
    if order == 0:
        return value, None, None

    dmu = half * lam ** (half - 1.0)
    # sum_l mu_l dGs(a_j, a_l)/da_j, zero diagonal built in
    coupling = np.einsum('l,jlp->jp', mu, data.green_grad)
    grad_x = (mu ** 2)[:, None] * data.robin_grad - 2.0 * mu[:, None] * coupling
    grad_lam = 2.0 * dmu * m_mu
    gradient = np.concatenate([a2 * grad_x.ravel(), a2 * grad_lam - 2.0 * b * lam])
    if order == 1:
        return value, gradient, None

    d2mu = half * (half - 1.0) * lam ** (half - 2.0)
    size = k * n + k
    hess = np.zeros((size, size))
    for j in range(k):
        rows = slice(j * n, (j + 1) * n)
        self_block = mu[j] ** 2 * data.robin_hess[j] - 2.0 * mu[j] * np.einsum(
            'l,lpq->pq', mu, data.green_hess_self[j])
        hess[rows, rows] = a2 * self_block
        for l in range(k):
            if l != j:
                cols = slice(l * n, (l + 1) * n)
                hess[rows, cols] = -2.0 * a2 * mu[j] * mu[l] * data.green_hess_pair[j, l]
        # position of peak j against scales
        hess[rows, k * n + j] = a2 * (2.0 * mu[j] * dmu[j] * data.robin_grad[j]
                                      - 2.0 * dmu[j] * coupling[j])
        for l in range(k):
            if l != j:
                hess[rows, k * n + l] = -2.0 * a2 * mu[j] * dmu[l] * data.green_grad[j, l]
    scale_block = 2.0 * np.outer(dmu, dmu) * matrix
    scale_block[np.diag_indices(k)] += 2.0 * d2mu * m_mu
    hess[k * n:, k * n:] = a2 * scale_block - 2.0 * b * np.eye(k)
    hess[k * n:, :k * n] = hess[:k * n, k * n:].T
    hess = 0.5 * (hess + hess.T)
    return value, gradient, hess


def psi_value(g: GreenProvider, c: PeakConfig, consts: UniversalConstants) -> float:
    """Psi_k at a peak configuration"""
    return psi_derivatives(g, c, consts, order=0)[0]


def psi_grad(g: GreenProvider, c: PeakConfig, consts: UniversalConstants) -> np.ndarray:
    """Analytic gradient of Psi_k, positions first (peak-major) then scales"""
    return psi_derivatives(g, c, consts, order=1)[1]


def psi_hess(g: GreenProvider, c: PeakConfig, consts: UniversalConstants) -> np.ndarray:
    """Analytic symmetric Hessian of Psi_k in the same layout as psi_grad"""
    return psi_derivatives(g, c, consts, order=2)[2]


def balance_lhs(g: GreenProvider, c: PeakConfig, consts: UniversalConstants) -> np.ndarray:
    """(M_k lam^{(N-2)/2})_j A^2 (N-2) lam_j^{(N-6)/2} / (2B); equals 1 at stationary scales"""
    n = c.dimension
    mu = c.scales ** ((n - 2) / 2.0)
    entries = m_matrix(g, c.points).entries
    return (entries @ mu) * consts.a_const ** 2 * (n - 2) * c.scales ** ((n - 6) / 2.0) / (2.0 * consts.b_const)

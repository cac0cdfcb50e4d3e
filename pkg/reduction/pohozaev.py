"""Surface bilinear forms on small spheres and the closed-form Green identities.

For a sphere of radius theta with outward normal nu,

    P(u, v) = -theta int du/dnu dv/dnu + theta/2 int grad u . grad v
              + (2-N)/4 int (du/dnu v + dv/dnu u)
    Q_i(u, v) = -int dv/dnu du/dx_i - int du/dnu dv/dx_i + int grad u . grad v nu_i

The dilation and translation forms used with pole-derivative fields, P1 and Q1,
have the same integrands. Both forms are independent of theta for u, v harmonic
in the punctured ball, which makes their values checkable against closed forms
built from R and G.

Pole derivatives follow the convention d_h G(q, .) = dG(q, .)/dq_h.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from reduction.bubble import UniversalConstants
from reduction.errors import GeometryError
from reduction.green import GreenProvider
from reduction.psi import PeakConfig, m_matrix
from reduction.quadrature import SphereQuadrature, SurfaceEstimate, default_theta, estimate
from utils.logger import get_logger

logger = get_logger(__name__)

_CHUNK = 8192


class SurfaceField(ABC):
    """Scalar field with gradient, evaluated on batches of points"""

    provider: Optional[GreenProvider] = None
    poles: Tuple[np.ndarray, ...] = ()

    @abstractmethod
    def evaluate(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Values (m,) and gradients (m, N)"""

    def __add__(self, other: 'SurfaceField') -> 'SurfaceField':
        return SumField(self, other)


class GreenField(SurfaceField):
    """y -> G(pole, y)"""

    def __init__(self, provider: GreenProvider, pole):
        self.provider = provider
        self.pole = np.asarray(pole, dtype=float)
        self.poles = (self.pole,)

    def evaluate(self, points):
        jet = self.provider.green_jet(self.pole, points, order=1)
        return jet.value, jet.grad_y


class PoleDerivativeField(SurfaceField):
    """y -> dG(q, y)/dq_h at q = pole"""

    def __init__(self, provider: GreenProvider, pole, h: int):
        self.provider = provider
        self.pole = np.asarray(pole, dtype=float)
        self.h = h
        self.poles = (self.pole,)

    def evaluate(self, points):
        jet = self.provider.green_jet(self.pole, points, order=2)
        return jet.grad_x[:, self.h], jet.hess_xy[:, self.h, :]


class FunctionField(SurfaceField):
    """Field given by explicit value and gradient callables"""

    def __init__(self, value: Callable[[np.ndarray], np.ndarray],
                 gradient: Callable[[np.ndarray], np.ndarray]):
        self.value = value
        self.gradient = gradient

    def evaluate(self, points):
        return self.value(points), self.gradient(points)


class SumField(SurfaceField):
    def __init__(self, first: SurfaceField, second: SurfaceField):
        self.first = first
        self.second = second
        self.provider = first.provider if first.provider is not None else second.provider
        self.poles = tuple(first.poles) + tuple(second.poles)

    def evaluate(self, points):
        v1, g1 = self.first.evaluate(points)
        v2, g2 = self.second.evaluate(points)
        return v1 + v2, g1 + g2


@dataclass
class IdentityResidual:
    """Quadrature value of one identity case against its closed form"""
    name: str
    family: str
    sphere: int
    numeric_lhs: float
    closed_form_rhs: float
    abs_residual: float
    rel_residual: float
    theta_pair_drift: float
    std_error: float
    drift_std_error: float

    def to_dict(self) -> Dict[str, Any]:
        return {key: (value if isinstance(value, (str, int)) else float(value))
                for key, value in self.__dict__.items()}


# Sampling --------------------------------------------------------------

@dataclass
class _SphereSamples:
    normals: np.ndarray   # (B, b, N)
    weights: np.ndarray   # (B, b)
    theta: float
    area: float


def _sphere_samples(q: SphereQuadrature) -> Tuple[_SphereSamples, np.ndarray]:
    normals, weights = q.blocks()
    points = q.center + q.radius * normals.reshape(-1, normals.shape[-1])
    return _SphereSamples(normals, weights, float(q.radius), q.area), points


def _evaluate_fields(fields: Sequence[SurfaceField], points: np.ndarray, shape) -> Tuple[np.ndarray, np.ndarray]:
    n = points.shape[1]
    values = np.empty((len(fields), len(points)))
    grads = np.empty((len(fields), len(points), n))
    for start in range(0, len(points), _CHUNK):
        chunk = points[start:start + _CHUNK]
        for f, field in enumerate(fields):
            values[f, start:start + len(chunk)], grads[f, start:start + len(chunk)] = field.evaluate(chunk)
    return values.reshape(len(fields), *shape), grads.reshape(len(fields), *shape, n)


def _pole_family(g: GreenProvider, poles: np.ndarray, points: np.ndarray, shape) -> Tuple[np.ndarray, np.ndarray]:
    """G(x_m, .) for every pole, then dG(x_l, .)/dx_{l,h} pole-major, from one jet per pole"""
    k, n = poles.shape
    count = k * (1 + n)
    values = np.empty((count, len(points)))
    grads = np.empty((count, len(points), n))
    for start in range(0, len(points), _CHUNK):
        rows = slice(start, start + min(_CHUNK, len(points) - start))
        chunk = points[rows]
        for m in range(k):
            jet = g.green_jet(poles[m], chunk, order=2)
            values[m, rows] = jet.value
            grads[m, rows] = jet.grad_y
            dipoles = slice(k + m * n, k + (m + 1) * n)
            values[dipoles, rows] = jet.grad_x.T
            grads[dipoles, rows] = jet.hess_xy.transpose(1, 0, 2)
    return values.reshape(count, *shape), grads.reshape(count, *shape, n)


# Forms ------------------------------------------------------------------

def _p_table(u, du, v, dv, s: _SphereSamples) -> Tuple[np.ndarray, np.ndarray]:
    """Block estimates (a, c, B) and absolute magnitudes (a, c) of P"""
    nu, w, theta = s.normals, s.weights, s.theta
    n = nu.shape[-1]
    dn_u = np.einsum('aBbn,Bbn->aBb', du, nu)
    dn_v = np.einsum('cBbn,Bbn->cBb', dv, nu)
    t1 = np.einsum('aBb,cBb,Bb->acB', dn_u, dn_v, w)
    t2 = np.einsum('aBbn,cBbn,Bb->acB', du, dv, w, optimize=True)
    t3 = np.einsum('aBb,cBb,Bb->acB', dn_u, v, w) + np.einsum('aBb,cBb,Bb->acB', u, dn_v, w)
    blocks = s.area * (-theta * t1 + 0.5 * theta * t2 + (2.0 - n) / 4.0 * t3)

    aw = np.abs(w)
    norm_u, norm_v = np.linalg.norm(du, axis=-1), np.linalg.norm(dv, axis=-1)
    m1 = np.einsum('aBb,cBb,Bb->ac', np.abs(dn_u), np.abs(dn_v), aw)
    m2 = np.einsum('aBb,cBb,Bb->ac', norm_u, norm_v, aw)
    m3 = (np.einsum('aBb,cBb,Bb->ac', np.abs(dn_u), np.abs(v), aw)
          + np.einsum('aBb,cBb,Bb->ac', np.abs(u), np.abs(dn_v), aw))
    magnitude = s.area * (theta * m1 + 0.5 * theta * m2 + abs(2.0 - n) / 4.0 * m3) / w.shape[0]
    return blocks, magnitude


def _q_table(u, du, v, dv, s: _SphereSamples) -> Tuple[np.ndarray, np.ndarray]:
    """Block estimates (a, c, i, B) and absolute magnitudes (a, c, i) of Q_i"""
    nu, w = s.normals, s.weights
    dn_u = np.einsum('aBbn,Bbn->aBb', du, nu)
    dn_v = np.einsum('cBbn,Bbn->cBb', dv, nu)
    s1 = np.einsum('cBb,aBbi,Bb->aciB', dn_v, du, w, optimize=True)
    s2 = np.einsum('aBb,cBbi,Bb->aciB', dn_u, dv, w, optimize=True)
    s3 = np.einsum('aBbn,cBbn,Bbi,Bb->aciB', du, dv, nu, w, optimize=True)
    blocks = s.area * (-s1 - s2 + s3)

    aw = np.abs(w)
    norm_u, norm_v = np.linalg.norm(du, axis=-1), np.linalg.norm(dv, axis=-1)
    m1 = np.einsum('cBb,aBbi,Bb->aci', np.abs(dn_v), np.abs(du), aw, optimize=True)
    m2 = np.einsum('aBb,cBbi,Bb->aci', np.abs(dn_u), np.abs(dv), aw, optimize=True)
    m3 = np.einsum('aBb,cBb,Bbi,Bb->aci', norm_u, norm_v, np.abs(nu), aw, optimize=True)
    magnitude = s.area * (m1 + m2 + m3) / w.shape[0]
    return blocks, magnitude


def _validated_samples(u: SurfaceField, v: SurfaceField, q: SphereQuadrature):
    provider = u.provider if u.provider is not None else v.provider
    if provider is not None:
        q.validate(provider, [p for p in tuple(u.poles) + tuple(v.poles)
                              if np.linalg.norm(p - q.center) > 0])
    elif q.center is None or q.radius is None or not q.radius > 0:
        raise GeometryError("Quadrature sphere needs a center and a positive radius")
    s, points = _sphere_samples(q)
    shape = s.weights.shape
    fu, gu = _evaluate_fields([u], points, shape)
    fv, gv = _evaluate_fields([v], points, shape)
    return s, fu, gu, fv, gv


def form_P(u: SurfaceField, v: SurfaceField, q: SphereQuadrature) -> SurfaceEstimate:
    """
    Quadrature estimate of P(u, v) on the sphere of q.

    Raises:
        GeometryError: if the sphere leaves the domain or comes within half a
        pole distance of a pole of u or v other than its center
    """
    s, fu, gu, fv, gv = _validated_samples(u, v, q)
    blocks, magnitude = _p_table(fu, gu, fv, gv, s)
    value, error = estimate(blocks[0, 0], magnitude[0, 0])
    return SurfaceEstimate(float(value), float(error))


def form_Q(u: SurfaceField, v: SurfaceField, i: int, q: SphereQuadrature) -> SurfaceEstimate:
    """Quadrature estimate of Q_i(u, v) on the sphere of q."""
    s, fu, gu, fv, gv = _validated_samples(u, v, q)
    blocks, magnitude = _q_table(fu, gu, fv, gv, s)
    value, error = estimate(blocks[0, 0, i], magnitude[0, 0, i])
    return SurfaceEstimate(float(value), float(error))


def form_P1(u: SurfaceField, v: SurfaceField, q: SphereQuadrature) -> SurfaceEstimate:
    """P1(u, v); same integrand as P, used with v a pole-derivative field."""
    return form_P(u, v, q)


def form_Q1(u: SurfaceField, v: SurfaceField, i: int, q: SphereQuadrature) -> SurfaceEstimate:
    """Q1_i(u, v); same integrand as Q_i, used with v a pole-derivative field."""
    return form_Q(u, v, i, q)


# Identities -------------------------------------------------------------

def _closed_forms(g: GreenProvider, poles: np.ndarray, j: int) -> Dict[str, np.ndarray]:
    """
    Closed forms on the sphere around pole j, indexed [m, l, ...] with u = G(x_m, .)
    and v = G(x_l, .) or its pole derivative.
    """
    k, n = poles.shape
    robin = g.robin(poles[j])
    value = np.zeros(k)               # G(x_m, x_j)
    grad_target = np.zeros((k, n))    # d/dy G(x_m, y) at y = x_j
    grad_pole = np.zeros((k, n))      # d/dq G(q, x_j) at q = x_m
    hess_target = np.zeros((k, n, n))
    hess_mixed = np.zeros((k, n, n))  # [i, h] = d/dy_i d/dq_h
    for m in range(k):
        if m == j:
            continue
        jet = g.green_jet(poles[m], poles[j][None, :], order=2)
        value[m] = jet.value[0]
        grad_target[m] = jet.grad_y[0]
        grad_pole[m] = jet.grad_x[0]
        hess_target[m] = jet.hess_yy[0]
        hess_mixed[m] = jet.hess_xy[0].T

    P = np.zeros((k, k))
    Q = np.zeros((k, k, n))
    P1 = np.zeros((k, k, n))
    Q1 = np.zeros((k, k, n, n))
    P[j, j] = -(n - 2) / 2.0 * robin.value
    Q[j, j] = -robin.gradient
    P1[j, j] = -(n - 1) / 4.0 * robin.gradient
    Q1[j, j] = -0.5 * robin.hessian
    for other in range(k):
        if other == j:
            continue
        # u = G_j, v from another pole
        P[j, other] = (n - 2) / 4.0 * value[other]
        Q[j, other] = grad_target[other]
        P1[j, other] = (n - 2) / 4.0 * grad_pole[other]
        Q1[j, other] = hess_mixed[other]
        # u from another pole, v = G_j
        P[other, j] = (n - 2) / 4.0 * value[other]
        Q[other, j] = grad_target[other]
        P1[other, j] = n / 4.0 * grad_target[other]
        Q1[other, j] = hess_target[other]
    return {"P": P, "Q": Q, "P1": P1, "Q1": Q1}


def _numeric_tables(g: GreenProvider, poles: np.ndarray, q: SphereQuadrature) -> Dict[str, Tuple]:
    k, n = poles.shape
    s, points = _sphere_samples(q)
    values, grads = _pole_family(g, poles, points, s.weights.shape)
    u, du = values[:k], grads[:k]
    p_blocks, p_mag = _p_table(u, du, values, grads, s)
    q_blocks, q_mag = _q_table(u, du, values, grads, s)
    p_value, p_error = estimate(p_blocks, p_mag)
    q_value, q_error = estimate(q_blocks, q_mag)
    dipoles = slice(k, k + k * n)
    return {
        "P": (p_value[:, :k], p_error[:, :k]),
        "Q": (q_value[:, :k], q_error[:, :k]),
        # [m, l, h]
        "P1": (p_value[:, dipoles].reshape(k, k, n), p_error[:, dipoles].reshape(k, k, n)),
        # [m, l, i, h] from [m, (l, h), i]
        "Q1": (q_value[:, dipoles].reshape(k, k, n, n).transpose(0, 1, 3, 2),
               q_error[:, dipoles].reshape(k, k, n, n).transpose(0, 1, 3, 2)),
    }


def _case_name(family: str, j: int, index: Tuple[int, ...]) -> str:
    m, l = index[0], index[1]
    target = f"dG{l}" if family in ("P1", "Q1") else f"G{l}"
    directions = "".join(f"[{d}]" for d in index[2:])
    return f"{family}{directions}@{j}(G{m},{target})"


def verify_identities(g: GreenProvider, poles, q: SphereQuadrature) -> List[IdentityResidual]:
    """
    Evaluate every case of the four identity families on a sphere around each pole.

    q is a template: its scheme is used on every sphere, its radius when set,
    otherwise a fixed fraction of each pole's boundary distance. Each value is
    also computed at half the radius for the drift check.

    Args:
        g (GreenProvider): Green's function provider
        poles: interior points, shape (k, N)
        q (SphereQuadrature): quadrature template

    Returns:
        List[IdentityResidual]: residuals ordered by sphere, family and case
    """
    poles = np.atleast_2d(np.asarray(poles, dtype=float))
    k = len(poles)
    try:
        for pole in poles:
            g.require_interior(pole)
        residuals = []
        for j in range(k):
            theta = q.radius if q.radius is not None else default_theta(g, poles[j])
            for other in range(k):
                gap = float(np.linalg.norm(poles[other] - poles[j]))
                if other != j and gap <= 4.0 * theta:
                    raise GeometryError(f"Poles {j} and {other} are {gap:.4g} apart, need more than 4 * theta = {4 * theta:.4g}")
            sphere = q.at(poles[j], theta)
            sphere.validate(g, [p for i, p in enumerate(poles) if i != j])
            full = _numeric_tables(g, poles, sphere)
            half = _numeric_tables(g, poles, q.at(poles[j], 0.5 * theta))
            closed = _closed_forms(g, poles, j)

            sphere_scale = max(float(np.abs(table).max()) for table in closed.values())
            for family in ("P", "Q", "P1", "Q1"):
                rhs = closed[family]
                value, error = full[family]
                half_value, half_error = half[family]
                scale = float(np.abs(rhs).max()) or sphere_scale
                for index in np.ndindex(rhs.shape):
                    lhs = float(value[index])
                    exact = float(rhs[index])
                    mismatch = abs(lhs - exact)
                    residuals.append(IdentityResidual(
                        name=_case_name(family, j, index),
                        family=family,
                        sphere=j,
                        numeric_lhs=lhs,
                        closed_form_rhs=exact,
                        abs_residual=mismatch,
                        rel_residual=mismatch / max(abs(exact), scale),
                        theta_pair_drift=abs(lhs - float(half_value[index])),
                        std_error=float(error[index]),
                        # both radii share sample directions, so errors add
                        drift_std_error=float(error[index] + half_error[index]),
                    ))
        worst = max(r.rel_residual for r in residuals)
        logger.info(f"Verified {len(residuals)} identity cases on {k} sphere(s), worst relative residual {worst:.3g}")
        return residuals
    except Exception as e:
        logger.error(f"Error verifying identities: {str(e)}")
        raise


def balance_residual(g: GreenProvider, cp: Union[PeakConfig, Any], epsilon: float,
                     consts: UniversalConstants, relative: bool = False) -> np.ndarray:
    """
    Residual of the balance equations at concentration scales
    lambda_{j,eps} = eps^{-1/(N-4)} / lambda_j:

        R(x_j) / lambda_{j,eps}^{N-2} - sum_{l != j} G(x_j, x_l) / (lambda_{j,eps} lambda_{l,eps})^{(N-2)/2}
        - 2 B eps / (A^2 (N-2) lambda_{j,eps}^2)

    Args:
        cp: a CriticalPoint or a PeakConfig
        relative (bool): divide each component by its largest term

    Returns:
        np.ndarray: k residuals
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    config = cp if isinstance(cp, PeakConfig) else cp.config
    n = config.dimension
    lam_eps = epsilon ** (-1.0 / (n - 4)) / config.scales
    half = (n - 2) / 2.0
    entries = m_matrix(g, config.points).entries
    diagonal = np.diag(entries) / lam_eps ** (n - 2)
    coupling = -(entries - np.diag(np.diag(entries))) / np.outer(lam_eps, lam_eps) ** half
    cross = coupling.sum(axis=1)
    source = 2.0 * consts.b_const * epsilon / (consts.a_const ** 2 * (n - 2) * lam_eps ** 2)
    residual = diagonal - cross - source
    if not relative:
        return residual
    largest = np.max(np.abs(np.stack([diagonal, cross, source])), axis=0)
    return residual / largest

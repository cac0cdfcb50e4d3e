"""Multistart search for critical points of Psi_k and the solution counts.

The search runs in normalized units: positions are measured in L = diam / 2 from
the domain centroid, scales in lambda_ref (the single-peak balance scale of a
ball of radius L) and the energy in B lambda_ref^2. `grad_norm`, Hessian spectra
and `scale_bounds` refer to these units; reported configurations are physical.
"""

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy import linalg
from scipy.optimize import linear_sum_assignment

from config.config import config
from reduction.bubble import UniversalConstants
from reduction.errors import InconsistentBasePointsError, ReductionError
from reduction.green import GreenProvider
from reduction.psi import PeakConfig, is_positive, m_matrix, psi_derivatives
from utils.logger import get_logger
from utils.random_sampler import DomainSampler, spawn_seeds

logger = get_logger(__name__)

_ARMIJO = 1e-4
_MIN_STEP = 1.0 / 1024.0
_INFEASIBLE_HALVINGS = 4
_POLISH_STEPS = 3
_EXHAUSTIVE_MATCHING_MAX_K = 6


@dataclass
class SearchConfig:
    """Settings of the multistart Newton search"""
    starts: int = 200
    max_newton_iters: int = 100
    grad_tol: float = 1e-9
    dedup_radius: Optional[float] = None
    nondegeneracy_tol: float = 1e-8
    seed: int = 0
    interior_margin: float = 0.05
    scale_bounds: Tuple[float, float] = (1e-3, 1e3)
    scale_dedup_rtol: float = 1e-4
    n_jobs: int = 1

    def __post_init__(self):
        low, high = self.scale_bounds
        if not 0 < low < high:
            raise ValueError(f"scale_bounds must satisfy 0 < min < max, got {self.scale_bounds}")
        if not self.grad_tol > 0:
            raise ValueError(f"grad_tol must be positive, got {self.grad_tol}")
        if self.starts < 1 or self.max_newton_iters < 1:
            raise ValueError("starts and max_newton_iters must be positive")
        if not 0 <= self.interior_margin < 1:
            raise ValueError(f"interior_margin must lie in [0, 1), got {self.interior_margin}")

    @classmethod
    def from_config(cls, **overrides) -> 'SearchConfig':
        """Defaults from the application configuration, then explicit overrides"""
        defaults = config.search
        values = dict(
            starts=defaults.starts,
            max_newton_iters=defaults.max_newton_iters,
            grad_tol=defaults.grad_tol,
            nondegeneracy_tol=defaults.nondegeneracy_tol,
            seed=defaults.seed,
            interior_margin=defaults.interior_margin,
            scale_bounds=tuple(defaults.scale_bounds),
            scale_dedup_rtol=defaults.scale_dedup_rtol,
            n_jobs=config.runtime.n_jobs,
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def resolved_dedup_radius(self, g: GreenProvider) -> float:
        if self.dedup_radius is not None:
            return self.dedup_radius
        return config.search.dedup_factor * g.diameter

    def to_dict(self) -> Dict[str, Any]:
        return {
            "starts": self.starts,
            "max_newton_iters": self.max_newton_iters,
            "grad_tol": self.grad_tol,
            "dedup_radius": self.dedup_radius,
            "nondegeneracy_tol": self.nondegeneracy_tol,
            "seed": self.seed,
            "interior_margin": self.interior_margin,
            "scale_bounds": list(self.scale_bounds),
            "scale_dedup_rtol": self.scale_dedup_rtol,
        }


@dataclass
class CriticalPoint:
    """A classified critical point of Psi_k"""
    config: PeakConfig
    grad_norm: float
    hessian_eigenvalues: np.ndarray
    morse_index: int
    nondegenerate: bool
    m_matrix_positive: bool
    psi: float
    m_eigenvalues: np.ndarray
    balance_residual: float

    @property
    def k(self) -> int:
        return self.config.k

    @property
    def counted(self) -> bool:
        return self.nondegenerate and self.m_matrix_positive

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "points": self.config.points.tolist(),
            "scales": self.config.scales.tolist(),
            "psi": float(self.psi),
            "grad_norm": float(self.grad_norm),
            "hessian_eigenvalues": self.hessian_eigenvalues.tolist(),
            "morse_index": int(self.morse_index),
            "nondegenerate": bool(self.nondegenerate),
            "m_matrix_positive": bool(self.m_matrix_positive),
            "m_eigenvalues": self.m_eigenvalues.tolist(),
            "balance_residual": float(self.balance_residual),
        }


@dataclass
class KCount:
    """Critical points found for one k and the members of T_k"""
    k: int
    t_set: List[CriticalPoint]
    count: int
    excluded: List[CriticalPoint] = field(default_factory=list)
    # None until a rerun with doubled starts has been compared
    saturated: Optional[bool] = None

    def to_dict(self) -> Dict[str, Any]:
        entry = {
            "k": self.k,
            "count": self.count,
            "t_set": [cp.to_dict() for cp in self.t_set],
            "excluded": [cp.to_dict() for cp in self.excluded],
        }
        if self.saturated is not None:
            entry["saturated"] = self.saturated
        return entry


@dataclass
class CountReport:
    """Per-k enumeration of T_k with the total over k = 1..k_max"""
    per_k: List[KCount]
    k_max: int
    total: int
    s_set: Optional[List[np.ndarray]] = None

    @property
    def counts(self) -> Tuple[int, ...]:
        return tuple(entry.count for entry in self.per_k)

    @property
    def saturated(self) -> Optional[bool]:
        flags = [entry.saturated for entry in self.per_k]
        if any(flag is None for flag in flags):
            return None
        return all(flags)

    def to_dict(self) -> Dict[str, Any]:
        report = {
            "k_max": self.k_max,
            "total": self.total,
            "counts": list(self.counts),
            "per_k": [entry.to_dict() for entry in self.per_k],
        }
        if self.saturated is not None:
            report["saturated"] = self.saturated
        if self.s_set is not None:
            report["s_set"] = [s.tolist() for s in self.s_set]
        return report


class ReducedEnergy:
    """Psi_k in normalized coordinates for a fixed provider and peak count"""

    def __init__(self, g: GreenProvider, k: int, consts: UniversalConstants):
        n = g.dimension
        self.g = g
        self.k = k
        self.n = n
        self.consts = consts
        self.origin = np.asarray(g.centroid, dtype=float)
        self.length = 0.5 * g.diameter
        robin_ref = consts.green_factor * self.length ** (2 - n)
        self.lambda_ref = (consts.b_const / (consts.a_const ** 2 * robin_ref)) ** (1.0 / (n - 4))
        self.energy = consts.b_const * self.lambda_ref ** 2
        self.unit = np.concatenate([np.full(k * n, self.length), np.full(k, self.lambda_ref)])

    def to_config(self, z: np.ndarray) -> PeakConfig:
        points = self.origin + self.length * z[:self.k * self.n].reshape(self.k, self.n)
        return PeakConfig(points, self.lambda_ref * z[self.k * self.n:])

    def to_normalized(self, c: PeakConfig) -> np.ndarray:
        return np.concatenate([((c.points - self.origin) / self.length).ravel(), c.scales / self.lambda_ref])

    def evaluate(self, z: np.ndarray, order: int):
        value, grad, hess = psi_derivatives(self.g, self.to_config(z), self.consts, order)
        grad = None if grad is None else grad * self.unit / self.energy
        hess = None if hess is None else hess * np.outer(self.unit, self.unit) / self.energy
        return value / self.energy, grad, hess

    def feasible(self, z: np.ndarray, cfg: SearchConfig, min_separation: float) -> bool:
        t = z[self.k * self.n:]
        low, high = cfg.scale_bounds
        if np.any(t <= low) or np.any(t >= high):
            return False
        c = self.to_config(z)
        if np.any(self.g.boundary_distance(c.points) <= 0):
            return False
        return c.min_separation() > min_separation


def _newton_step(grad: np.ndarray, hess: np.ndarray) -> np.ndarray:
    """
    Newton step, with a truncated pseudo-inverse near singular Hessians.

    The Hessian is Jacobi-equilibrated first, so peaks whose scales differ by
    orders of magnitude keep their position directions in the truncated solve.
    """
    diagonal = np.abs(np.diag(hess))
    floor = diagonal.max()
    if floor == 0:
        return -grad
    d = 1.0 / np.sqrt(np.maximum(diagonal, 1e-300 + 1e-16 * floor))
    eigenvalues, vectors = linalg.eigh(d[:, None] * hess * d[None, :])
    scale = np.abs(eigenvalues).max()
    keep = np.abs(eigenvalues) > 1e-12 * scale
    coefficients = (vectors.T @ (d * grad))[keep] / eigenvalues[keep]
    return -d * (vectors[:, keep] @ coefficients)


def _damped_newton(energy: ReducedEnergy, z: np.ndarray, cfg: SearchConfig, min_separation: float,
                   free: Optional[np.ndarray] = None) -> Optional[np.ndarray]:
    """
    Damped Newton on the gradient with a line search on its squared norm.

    Args:
        free (np.ndarray): optional boolean mask of the coordinates allowed to move

    Returns:
        np.ndarray or None: converged normalized point, None when the start is discarded
    """
    mask = np.ones_like(z, dtype=bool) if free is None else free

    def restricted(point, order):
        _, grad, hess = energy.evaluate(point, order)
        return grad[mask], (None if hess is None else hess[np.ix_(mask, mask)])

    try:
        grad, hess = restricted(z, 2)
        for _ in range(cfg.max_newton_iters):
            merit = float(grad @ grad)
            if math.sqrt(merit) <= cfg.grad_tol:
                return _polish(energy, z, grad, hess, restricted, mask, cfg, min_separation)
            accepted = None
            for direction in (_newton_step(grad, hess), -hess @ grad):
                # directional derivative of the squared gradient norm
                slope = 2.0 * float(grad @ (hess @ direction))
                if slope >= 0:
                    continue
                alpha, infeasible = 1.0, 0
                while alpha >= _MIN_STEP:
                    trial = z.copy()
                    trial[mask] += alpha * direction
                    if not energy.feasible(trial, cfg, min_separation):
                        infeasible += 1
                        if infeasible > _INFEASIBLE_HALVINGS:
                            return None
                        alpha *= 0.5
                        continue
                    trial_grad, _ = restricted(trial, 1)
                    if float(trial_grad @ trial_grad) <= merit + _ARMIJO * alpha * slope:
                        accepted = trial
                        break
                    alpha *= 0.5
                if accepted is not None:
                    break
            if accepted is None:
                return None
            z = accepted
            grad, hess = restricted(z, 2)
        return None
    except ReductionError:
        return None


def _polish(energy, z, grad, hess, restricted, mask, cfg, min_separation):
    best = float(grad @ grad)
    for _ in range(_POLISH_STEPS):
        trial = z.copy()
        trial[mask] += _newton_step(grad, hess)
        if not energy.feasible(trial, cfg, min_separation):
            break
        trial_grad, trial_hess = restricted(trial, 2)
        trial_merit = float(trial_grad @ trial_grad)
        if trial_merit >= best:
            break
        z, grad, hess, best = trial, trial_grad, trial_hess, trial_merit
    return z


def start_strata(g: GreenProvider, k: int) -> List[Tuple[int, ...]]:
    """Component assignments of k peaks up to permutation, in a fixed order"""
    return list(itertools.combinations_with_replacement(range(g.component_count), k))


def _run_start(energy: ReducedEnergy, seed: int, stratum: Tuple[int, ...], cfg: SearchConfig,
               min_separation: float) -> Optional[np.ndarray]:
    sampler = DomainSampler(seed)
    points = energy.g.sample_components(sampler, stratum, cfg.interior_margin)
    scales = sampler.log_uniform(energy.k, *cfg.scale_bounds)
    z0 = np.concatenate([((points - energy.origin) / energy.length).ravel(), scales])
    if not energy.feasible(z0, cfg, min_separation):
        return None
    # relax the scales at the sampled positions before moving the peaks
    free = np.concatenate([np.zeros(energy.k * energy.n, dtype=bool), np.ones(energy.k, dtype=bool)])
    relaxed = _damped_newton(energy, z0, cfg, min_separation, free=free)
    return _damped_newton(energy, z0 if relaxed is None else relaxed, cfg, min_separation)


def _matches(first: PeakConfig, second: PeakConfig, radius: float, rtol: float) -> bool:
    """Equality modulo peak permutation, by optimal assignment"""
    k = first.k
    gaps = np.linalg.norm(first.points[:, None, :] - second.points[None, :, :], axis=2)
    ratio = np.abs(first.scales[:, None] - second.scales[None, :]) / first.scales[:, None]
    admissible = (gaps <= radius) & (ratio <= rtol)
    if k <= _EXHAUSTIVE_MATCHING_MAX_K:
        return any(all(admissible[i, p[i]] for i in range(k))
                   for p in itertools.permutations(range(k)))
    rows, cols = linear_sum_assignment(np.where(admissible, gaps, 1e300))
    return bool(admissible[rows, cols].all())


def _canonical(c: PeakConfig, length: float) -> PeakConfig:
    keys = np.round(c.points / length, 8)
    order = np.lexsort(keys.T[::-1])
    return c.permuted(order)


def classify(energy: ReducedEnergy, c: PeakConfig, cfg: SearchConfig) -> CriticalPoint:
    """Spectral classification of a converged configuration"""
    z = energy.to_normalized(c)
    value, grad, hess = energy.evaluate(z, 2)
    eigenvalues = np.sort(linalg.eigvalsh(hess))
    largest = float(np.abs(eigenvalues).max())
    matrix = m_matrix(energy.g, c.points)
    n = c.dimension
    mu = c.scales ** ((n - 2) / 2.0)
    balance = ((matrix.entries @ mu) * energy.consts.a_const ** 2 * (n - 2)
               * c.scales ** ((n - 6) / 2.0) / (2.0 * energy.consts.b_const))
    return CriticalPoint(
        config=c,
        grad_norm=float(np.linalg.norm(grad)),
        hessian_eigenvalues=eigenvalues,
        morse_index=int(np.sum(eigenvalues < 0)),
        nondegenerate=bool(np.abs(eigenvalues).min() > cfg.nondegeneracy_tol * largest),
        m_matrix_positive=is_positive(matrix),
        psi=value * energy.energy,
        m_eigenvalues=linalg.eigvalsh(matrix.entries),
        balance_residual=float(np.abs(balance - 1.0).max()),
    )


def find_critical(g: GreenProvider, k: int, cfg: SearchConfig, consts: UniversalConstants) -> List[CriticalPoint]:
    """
    Seeded multistart damped Newton search for critical points of Psi_k.

    Args:
        g (GreenProvider): Green's function provider
        k (int): number of peaks
        cfg (SearchConfig): search settings
        consts (UniversalConstants): constants of the dimension

    Returns:
        List[CriticalPoint]: distinct points modulo peak permutation, sorted by
        (Psi value, coordinates); empty when no start converges
    """
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    try:
        energy = ReducedEnergy(g, k, consts)
        radius = cfg.resolved_dedup_radius(g)
        seeds = spawn_seeds(cfg.seed, cfg.starts)
        strata = start_strata(g, k)
        logger.info(f"Searching critical points of Psi_{k}: {cfg.starts} starts over "
                    f"{len(strata)} component assignment(s), n_jobs={cfg.n_jobs}")

        results = Parallel(n_jobs=cfg.n_jobs)(
            delayed(_run_start)(energy, seed, strata[i % len(strata)], cfg, radius)
            for i, seed in enumerate(seeds)
        )
        converged = [z for z in results if z is not None]
        logger.info(f"{len(converged)} of {cfg.starts} starts converged for k={k}")

        distinct: List[PeakConfig] = []
        for z in converged:
            candidate = _canonical(energy.to_config(z), energy.length)
            if not any(_matches(candidate, kept, radius, cfg.scale_dedup_rtol) for kept in distinct):
                distinct.append(candidate)

        points = []
        for candidate in distinct:
            cp = classify(energy, candidate, cfg)
            if cp.grad_norm > cfg.grad_tol:
                logger.warning(f"Dropping a point whose fresh gradient norm {cp.grad_norm:.3g} exceeds grad_tol")
                continue
            if not cp.nondegenerate:
                logger.warning(f"Degenerate critical point for k={k} at {candidate.points.tolist()}")
            points.append(cp)

        points.sort(key=lambda cp: (cp.k, cp.psi, tuple(cp.config.points.ravel()), tuple(cp.config.scales)))
        return points
    except Exception as e:
        logger.error(f"Error in critical point search for k={k}: {str(e)}")
        raise


def s_set(g: GreenProvider, base_points: np.ndarray, cfg: SearchConfig,
          consts: UniversalConstants) -> List[np.ndarray]:
    """
    Scales making the full gradient of Psi_k vanish at fixed peak locations.

    Raises:
        InconsistentBasePointsError: if scales solve the scale equations but the
        position gradient stays above grad_tol for all of them
    """
    base_points = np.atleast_2d(np.asarray(base_points, dtype=float))
    k, n = base_points.shape
    for point in base_points:
        g.require_interior(point)
    energy = ReducedEnergy(g, k, consts)
    free = np.concatenate([np.zeros(k * n, dtype=bool), np.ones(k, dtype=bool)])
    fixed = ((base_points - energy.origin) / energy.length).ravel()
    min_separation = min(cfg.resolved_dedup_radius(g), 0.5 * PeakConfig(base_points, np.ones(k)).min_separation())

    solutions: List[np.ndarray] = []
    for seed in spawn_seeds(cfg.seed, cfg.starts):
        sampler = DomainSampler(seed)
        z0 = np.concatenate([fixed, sampler.log_uniform(k, *cfg.scale_bounds)])
        z = _damped_newton(energy, z0, cfg, min_separation, free=free)
        if z is None:
            continue
        scales = energy.lambda_ref * z[k * n:]
        if not any(np.all(np.abs(scales - s) <= cfg.scale_dedup_rtol * s) for s in solutions):
            solutions.append(scales)

    valid = []
    for scales in solutions:
        _, grad, _ = energy.evaluate(energy.to_normalized(PeakConfig(base_points, scales)), 1)
        if np.linalg.norm(grad) <= cfg.grad_tol:
            valid.append(scales)
    if solutions and not valid:
        raise InconsistentBasePointsError(
            f"Position gradient of Psi_{k} does not vanish at {base_points.tolist()} for any stationary scales"
        )
    valid.sort(key=tuple)
    return valid


def _same_points(first: List[CriticalPoint], second: List[CriticalPoint], radius: float, rtol: float) -> bool:
    return len(first) == len(second) and all(
        any(_matches(a.config, b.config, radius, rtol) for b in second) for a in first
    )


def count_solutions(g: GreenProvider, k_max: int, cfg: SearchConfig, consts: UniversalConstants,
                    base_points: Optional[np.ndarray] = None, check_saturation: bool = False) -> CountReport:
    """
    Enumerate T_k for k = 1..k_max and total the counts.

    k_max stands in for the largest number of blow-up points, which this library
    cannot compute. Degenerate points and points with non-positive M_k are listed
    as excluded and never counted.

    With `check_saturation` every k is searched again with twice the starts (the
    original starts plus as many new ones); `KCount.saturated` records whether
    T_k came out the same.
    """
    if k_max < 1:
        raise ValueError(f"k_max must be at least 1, got {k_max}")
    radius = cfg.resolved_dedup_radius(g)
    doubled = replace(cfg, starts=2 * cfg.starts)
    per_k = []
    for k in range(1, k_max + 1):
        found = find_critical(g, k, cfg, consts)
        t_set = [cp for cp in found if cp.counted]
        entry = KCount(k=k, t_set=t_set, count=len(t_set), excluded=[cp for cp in found if not cp.counted])
        if check_saturation:
            again = [cp for cp in find_critical(g, k, doubled, consts) if cp.counted]
            entry.saturated = _same_points(t_set, again, radius, cfg.scale_dedup_rtol)
            if not entry.saturated:
                logger.warning(f"k={k}: {len(t_set)} counted with {cfg.starts} starts but "
                               f"{len(again)} with {doubled.starts}")
        per_k.append(entry)
        logger.info(f"k={k}: {len(t_set)} counted of {len(found)} critical points")
    report = CountReport(per_k=per_k, k_max=k_max, total=sum(entry.count for entry in per_k))
    if base_points is not None:
        report.s_set = s_set(g, base_points, cfg, consts)
    return report

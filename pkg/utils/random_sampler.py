import numpy as np
from typing import List, Optional
from scipy.stats import norm, ortho_group, qmc


def spawn_seeds(seed: int, count: int) -> List[int]:
    """Derive `count` independent child seeds from a master seed"""
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(child.generate_state(1, dtype=np.uint64)[0]) for child in children]


def sobol_directions(count: int, n: int, seed: int) -> np.ndarray:
    """Quasi-uniform unit vectors from scrambled Sobol points through the normal inverse CDF"""
    sampler = qmc.Sobol(d=n, scramble=True, seed=seed)
    # Sobol balance needs a power of two; draw that many and keep the first `count`
    m = int(np.ceil(np.log2(max(count, 2))))
    u = sampler.random_base2(m)[:count]
    z = norm.ppf(np.clip(u, 1e-12, 1.0 - 1e-12))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


class DomainSampler:
    """Seeded random draws used by the searches and quadratures"""

    def __init__(self, seed: Optional[int] = 42):
        """Initialize the sampler with a random seed"""
        self.seed = seed
        self.rng = np.random.default_rng(seed)

    def sphere_directions(self, count: int, n: int) -> np.ndarray:
        """Uniform points on S^{n-1} from normalized Gaussian vectors"""
        z = self.rng.standard_normal((count, n))
        return z / np.linalg.norm(z, axis=1, keepdims=True)

    def uniform_ball(self, count: int, n: int, radius: float = 1.0, center=None) -> np.ndarray:
        """Uniform points in the ball of given radius"""
        directions = self.sphere_directions(count, n)
        radii = radius * self.rng.random(count) ** (1.0 / n)
        points = directions * radii[:, None]
        if center is not None:
            points = points + np.asarray(center, dtype=float)
        return points

    def log_uniform(self, count: int, low: float, high: float) -> np.ndarray:
        """Log-uniform draws in [low, high]"""
        return np.exp(self.rng.uniform(np.log(low), np.log(high), count))

    def rotations(self, count: int, n: int) -> np.ndarray:
        """Haar-distributed orthogonal matrices, shape (count, n, n)"""
        frames = ortho_group.rvs(dim=n, size=count, random_state=self.rng)
        return np.asarray(frames).reshape(count, n, n)

    def choice(self, count: int, weights) -> np.ndarray:
        """Indices drawn with probabilities proportional to weights"""
        weights = np.asarray(weights, dtype=float)
        return self.rng.choice(len(weights), size=count, p=weights / weights.sum())

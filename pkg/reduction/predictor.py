"""Blow-up asymptotics predicted from a critical point of Psi_k."""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Union

import numpy as np
import pandas as pd

from reduction.bubble import BubbleParams, Dimension, UniversalConstants, projected_bubble
from reduction.errors import InvalidDimensionError, NearPeakError
from reduction.green import GreenProvider
from reduction.psi import PeakConfig
from utils.logger import get_logger

logger = get_logger(__name__)

VALIDITY_OK = "ok"
VALIDITY_N5 = "n_equals_5_warning"
D_DEFAULT_FACTOR = 0.1


@dataclass
class PeakPrediction:
    location: np.ndarray
    lambda_eps: float
    height: float

    def to_dict(self) -> Dict[str, Any]:
        return {"location": self.location.tolist(), "lambda_eps": self.lambda_eps, "height": self.height}


@dataclass
class BlowupPrediction:
    """Concentration scales and peak heights of u_eps at a given epsilon"""
    epsilon: float
    dimension: int
    per_peak: List[PeakPrediction]
    validity_note: str = VALIDITY_OK

    @property
    def locations(self) -> np.ndarray:
        return np.array([peak.location for peak in self.per_peak])

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([peak.lambda_eps for peak in self.per_peak])

    def error_order(self) -> float:
        """Size of the neglected remainder, lambda_eps^{-(N+2)/2} at the smallest scale"""
        return float(self.lambdas.min() ** (-(self.dimension + 2) / 2.0))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "epsilon": self.epsilon,
            "dimension": self.dimension,
            "per_peak": [peak.to_dict() for peak in self.per_peak],
            "validity_note": self.validity_note,
        }


@dataclass
class FieldSamples:
    """Approximate solution sampled on a grid, with its error metadata"""
    points: np.ndarray
    values: np.ndarray
    metadata: Dict[str, Any] = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        columns = [f"x{i + 1}" for i in range(self.points.shape[1])]
        frame = pd.DataFrame(self.points, columns=columns)
        frame["value"] = self.values
        return frame


def predict(cp, epsilon: float, n: int) -> BlowupPrediction:
    """
    Concentration scales lambda_{j,eps} = eps^{-1/(N-4)} / lambda_j and heights
    lambda_{j,eps}^{(N-2)/2}.

    Args:
        cp: CriticalPoint or PeakConfig
        epsilon (float): perturbation parameter, positive
        n (int): space dimension

    Returns:
        BlowupPrediction: per-peak prediction; N = 5 is flagged as unreliable

    Raises:
        InvalidDimensionError: for N <= 4, where the exponent 1/(N-4) is undefined
    """
    if n <= 4:
        raise InvalidDimensionError(f"Exponent 1/(N-4) is undefined or negative for N = {n}")
    dimension = Dimension(n)
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    config = cp if isinstance(cp, PeakConfig) else cp.config
    if config.dimension != n:
        raise InvalidDimensionError(f"Critical point lives in R^{config.dimension}, not R^{n}")

    note = VALIDITY_OK
    if dimension.borderline:
        logger.warning("Blow-up asymptotics are not reliable for N = 5")
        note = VALIDITY_N5
    peaks = []
    for location, scale in zip(config.points, config.scales):
        lambda_eps = float(epsilon ** (-1.0 / (n - 4)) / scale)
        peaks.append(PeakPrediction(location=location.copy(), lambda_eps=lambda_eps,
                                    height=lambda_eps ** ((n - 2) / 2.0)))
    return BlowupPrediction(epsilon=float(epsilon), dimension=n, per_peak=peaks, validity_note=note)


def default_exclusion_radius(g: GreenProvider, pred: BlowupPrediction) -> float:
    """0.1 * min(peak separation, boundary distance of the peaks)"""
    locations = pred.locations
    distance = float(g.boundary_distance(locations).min())
    if len(locations) > 1:
        gaps = np.linalg.norm(locations[:, None, :] - locations[None, :, :], axis=2)
        distance = min(distance, float(gaps[np.triu_indices(len(locations), 1)].min()))
    return D_DEFAULT_FACTOR * distance


def far_field(g: GreenProvider, pred: BlowupPrediction, x, consts: UniversalConstants) -> float:
    """
    Leading far-field term A sum_j G(a_j, x) / lambda_{j,eps}^{(N-2)/2}; the remainder
    is O(lambda_eps^{-(N+2)/2}).

    Raises:
        NearPeakError: if x is within the default exclusion radius of a peak
    """
    x = np.asarray(x, dtype=float)
    g.require_interior(x)
    radius = default_exclusion_radius(g, pred)
    gaps = np.linalg.norm(pred.locations - x, axis=1)
    if np.any(gaps <= radius):
        nearest = int(np.argmin(gaps))
        raise NearPeakError(f"Point {x.tolist()} is within {radius:.4g} of peak {nearest}")
    half = (pred.dimension - 2) / 2.0
    total = 0.0
    for peak in pred.per_peak:
        total += g.green(peak.location, x) / peak.lambda_eps ** half
    return consts.a_const * total


def approximate_field(g: GreenProvider, pred: BlowupPrediction, grid: Union[np.ndarray, List]) -> FieldSamples:
    """
    Sum of projected bubbles at the predicted centers and scales, sampled on grid.

    The remainder w_eps is not modeled; its order is recorded in the metadata.
    """
    points = np.atleast_2d(np.asarray(grid, dtype=float))
    try:
        values = np.zeros(len(points))
        for peak in pred.per_peak:
            values += projected_bubble(BubbleParams(peak.location, peak.lambda_eps), points, g)
        n = pred.dimension
        metadata = {
            "prediction": pred.to_dict(),
            "neglected_remainder_order": f"lambda_eps^(-{n + 2}/2)",
            "neglected_remainder_size": pred.error_order(),
        }
        logger.info(f"Approximate field sampled on {len(points)} points for {len(pred.per_peak)} peak(s)")
        return FieldSamples(points=points, values=values, metadata=metadata)
    except Exception as e:
        logger.error(f"Error sampling approximate field: {str(e)}")
        raise

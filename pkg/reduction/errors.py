"""Exception hierarchy for the reduction library.

Input problems derive from ``ValueError`` and numerical breakdowns from
``RuntimeError`` so callers can keep catching the builtin types.
"""

from typing import Optional


class ReductionError(Exception):
    """Base class for all library errors"""


class InvalidDimensionError(ReductionError, ValueError):
    """Space dimension outside the range an operation supports"""


class DomainError(ReductionError, ValueError):
    """Point on the boundary or outside the domain"""


class SingularityError(ReductionError, ValueError):
    """Evaluation at coincident points of a singular kernel"""


class GeometryError(ReductionError, ValueError):
    """Quadrature sphere does not fit the domain or overlaps other poles"""


class NearPeakError(ReductionError, ValueError):
    """Far-field evaluation too close to a concentration point"""


class InconsistentBasePointsError(ReductionError, ValueError):
    """Peak locations are not stationary for any admissible scales"""


class NumericalFailure(ReductionError, RuntimeError):
    """A numerical procedure could not deliver a trustworthy result"""


class FitFailureError(NumericalFailure):
    """Fundamental-solution fit whose boundary residual exceeds tolerance"""

    def __init__(self, message: str, residual: Optional[float] = None):
        super().__init__(message)
        self.residual = residual


class SearchExpectationError(NumericalFailure):
    """A search returned nothing where a result was required"""

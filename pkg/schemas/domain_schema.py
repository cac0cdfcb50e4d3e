from pydantic import BaseModel, Field, field_validator, model_validator
from typing import List, Literal, Union
import itertools
import numpy as np

from config.config import config

class BallModel(BaseModel):
    """A ball {|y - center| < radius}"""
    center: List[float]
    radius: float = Field(gt=0)

class BallShape(BallModel):
    """Single ball domain"""
    type: Literal["ball"] = "ball"

class DisjointBallsShape(BaseModel):
    """Union of balls with pairwise disjoint closures"""
    type: Literal["disjoint_balls"] = "disjoint_balls"
    balls: List[BallModel] = Field(min_length=1)

    @field_validator('balls')
    @classmethod
    def validate_disjoint(cls, v):
        errors = []
        for (i, first), (j, second) in itertools.combinations(enumerate(v), 2):
            gap = np.linalg.norm(np.subtract(first.center, second.center))
            if gap <= first.radius + second.radius:
                errors.append(
                    f"Balls {i} and {j} overlap: center distance {gap:.6g} "
                    f"<= radius sum {first.radius + second.radius:.6g}"
                )
        if errors:
            raise ValueError("; ".join(errors))
        return v

class EllipsoidBoundary(BaseModel):
    """Boundary point source {center + semi_axes * u : |u| = 1}"""
    kind: Literal["ellipsoid"] = "ellipsoid"
    center: List[float]
    semi_axes: List[float]

    @field_validator('semi_axes')
    @classmethod
    def validate_axes(cls, v):
        if any(a <= 0 for a in v):
            raise ValueError("Ellipsoid semi-axes must be positive")
        return v

class RadialMode(BaseModel):
    """Term amplitude * (u . direction)^degree of a radial function"""
    direction: List[float]
    degree: int = Field(ge=1, le=12)
    amplitude: float

    @field_validator('direction')
    @classmethod
    def validate_direction(cls, v):
        if not np.any(np.asarray(v, dtype=float)):
            raise ValueError("Mode direction must be nonzero")
        return v

class StarBoundary(BaseModel):
    """Star-shaped boundary {center + radius * (1 + sum of modes)(u) * u : |u| = 1}"""
    kind: Literal["star"] = "star"
    center: List[float]
    radius: float = Field(gt=0)
    modes: List[RadialMode] = Field(default_factory=list)

    @field_validator('modes')
    @classmethod
    def validate_positive_radius(cls, v):
        total = sum(abs(m.amplitude) for m in v)
        if total >= 1:
            raise ValueError(f"Mode amplitudes must sum to less than 1 in absolute value, got {total:.6g}")
        return v

Boundary = Union[EllipsoidBoundary, StarBoundary]

def _green_default(name: str):
    return lambda: getattr(config.green, name)

class SmoothShape(BaseModel):
    """Smooth domain handled by the fundamental-solution engine; fit settings default to config.green"""
    type: Literal["smooth"] = "smooth"
    boundary: Boundary = Field(discriminator='kind')
    mfs_offset: float = Field(default_factory=_green_default("mfs_offset"), gt=0)
    mfs_sources: int = Field(default_factory=_green_default("mfs_sources"), gt=0)
    collocation_points: int = Field(default_factory=_green_default("collocation_points"), gt=0)
    reference: Literal["enclosing_ball", "none"] = Field(default_factory=_green_default("mfs_reference"))

    @model_validator(mode='after')
    def validate_overdetermined(self):
        if self.mfs_sources > self.collocation_points:
            raise ValueError(
                f"mfs_sources ({self.mfs_sources}) must not exceed "
                f"collocation_points ({self.collocation_points})"
            )
        return self

Shape = Union[BallShape, DisjointBallsShape, SmoothShape]

class DomainSpec(BaseModel):
    """Declarative description of the domain and its dimension"""
    dimension: int = Field(ge=5)
    shape: Shape = Field(discriminator='type')
    version: str = "1.0.0"

    @model_validator(mode='after')
    def validate_coordinates(self):
        n = self.dimension
        errors = []
        if isinstance(self.shape, BallShape):
            vectors = {"shape.center": self.shape.center}
        elif isinstance(self.shape, DisjointBallsShape):
            vectors = {f"shape.balls.{i}.center": b.center for i, b in enumerate(self.shape.balls)}
        elif isinstance(self.shape.boundary, EllipsoidBoundary):
            vectors = {
                "shape.boundary.center": self.shape.boundary.center,
                "shape.boundary.semi_axes": self.shape.boundary.semi_axes,
            }
        else:
            vectors = {"shape.boundary.center": self.shape.boundary.center}
            vectors.update({f"shape.boundary.modes.{i}.direction": m.direction
                            for i, m in enumerate(self.shape.boundary.modes)})
        for name, vector in vectors.items():
            if len(vector) != n:
                errors.append(f"{name} has {len(vector)} coordinates, expected {n}")
        if errors:
            raise ValueError("; ".join(errors))
        return self

def ball_domain(dimension: int, radius: float = 1.0, center=None) -> DomainSpec:
    """Convenience constructor for a ball domain"""
    center = [0.0] * dimension if center is None else list(center)
    return DomainSpec(dimension=dimension, shape=BallShape(center=center, radius=radius))

def disjoint_balls_domain(dimension: int, centers, radius: float = 1.0) -> DomainSpec:
    """Convenience constructor for equal disjoint balls"""
    balls = [BallModel(center=list(c), radius=radius) for c in centers]
    return DomainSpec(dimension=dimension, shape=DisjointBallsShape(balls=balls))

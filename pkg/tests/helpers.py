import numpy as np

from schemas.domain_schema import DomainSpec


def axis_point(n: int, *leading) -> np.ndarray:
    """Point with the given leading coordinates and zeros elsewhere"""
    point = np.zeros(n)
    point[:len(leading)] = leading
    return point


def _smooth(n: int, boundary: dict, sources, collocation, fit) -> DomainSpec:
    shape = {"type": "smooth", "boundary": boundary, **fit}
    if sources is not None:
        shape["mfs_sources"] = sources
    if collocation is not None:
        shape["collocation_points"] = collocation
    return DomainSpec.model_validate({"dimension": n, "shape": shape})


def smooth_spec(semi_axes, sources: int = None, collocation: int = None, **fit) -> DomainSpec:
    """Centered ellipsoid handled by the fundamental-solution provider; unset counts come from config"""
    n = len(semi_axes)
    boundary = {"kind": "ellipsoid", "center": [0.0] * n, "semi_axes": list(semi_axes)}
    return _smooth(n, boundary, sources, collocation, fit)


def star_spec(n: int, modes, radius: float = 1.0, sources: int = None, collocation: int = None,
              **fit) -> DomainSpec:
    """Centered star-shaped domain; modes are (direction, degree, amplitude) triples"""
    boundary = {
        "kind": "star",
        "center": [0.0] * n,
        "radius": radius,
        "modes": [{"direction": list(d), "degree": p, "amplitude": a} for d, p, a in modes],
    }
    return _smooth(n, boundary, sources, collocation, fit)

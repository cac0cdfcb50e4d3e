import json

import pytest

from config.config import config
from schemas.domain_schema import BallShape, DisjointBallsShape, EllipsoidBoundary, SmoothShape, StarBoundary, ball_domain
from utils.domain_loader import DomainLoader


@pytest.fixture
def loader():
    return DomainLoader()


def test_load_ball(loader, ball_domain_file):
    """Test loading a valid ball description"""
    spec = loader.load_domain(ball_domain_file)
    assert spec.dimension == 6
    assert isinstance(spec.shape, BallShape)
    assert spec.shape.radius == 1.0
    assert spec == ball_domain(6)


def test_parse_shapes(loader):
    """Test the three shape variants"""
    balls = loader.parse(json.dumps({
        "dimension": 5,
        "shape": {"type": "disjoint_balls", "balls": [
            {"center": [-2, 0, 0, 0, 0], "radius": 1},
            {"center": [2, 0, 0, 0, 0], "radius": 1},
        ]},
    }))
    assert isinstance(balls.shape, DisjointBallsShape)

    smooth = loader.parse(json.dumps({
        "dimension": 6,
        "shape": {"type": "smooth",
                  "boundary": {"kind": "ellipsoid", "center": [0] * 6, "semi_axes": [1, 1, 1, 1, 1, 0.8]}},
    }))
    assert isinstance(smooth.shape, SmoothShape)
    assert smooth.shape.mfs_sources == config.green.mfs_sources == 800
    assert smooth.shape.mfs_offset == config.green.mfs_offset
    assert smooth.shape.reference == "enclosing_ball"

    star = loader.parse(json.dumps({
        "dimension": 6,
        "shape": {"type": "smooth", "mfs_sources": 400, "collocation_points": 900, "reference": "none",
                  "boundary": {"kind": "star", "center": [0] * 6, "radius": 1.5,
                               "modes": [{"direction": [0, 0, 0, 0, 0, 2], "degree": 4, "amplitude": -0.2}]}},
    }))
    assert isinstance(star.shape.boundary, StarBoundary)
    assert star.shape.boundary.modes[0].degree == 4
    assert star.shape.reference == "none"


def test_malformed_json_reports_position(loader):
    """Test that JSON syntax errors carry line and column"""
    with pytest.raises(ValueError) as excinfo:
        loader.parse('{\n  "dimension": 6,\n  "shape": }', source="broken.json")
    message = str(excinfo.value)
    assert "broken.json" in message
    assert "line 3" in message


def test_invalid_fields_report_paths(loader):
    """Test that schema violations name the offending fields"""
    with pytest.raises(ValueError) as excinfo:
        loader.validate({"dimension": 6, "shape": {"type": "ball", "center": [0] * 6, "radius": -1}})
    assert "radius" in str(excinfo.value)

    with pytest.raises(ValueError) as excinfo:
        loader.validate({"dimension": 4, "shape": {"type": "ball", "center": [0] * 4, "radius": 1}})
    assert "dimension" in str(excinfo.value)


def test_coordinate_count_checked(loader):
    with pytest.raises(ValueError) as excinfo:
        loader.validate({"dimension": 6, "shape": {"type": "ball", "center": [0] * 5, "radius": 1}})
    assert "shape.center" in str(excinfo.value)


def test_overlapping_balls_rejected(loader):
    """Test that touching or overlapping balls are refused"""
    with pytest.raises(ValueError) as excinfo:
        loader.validate({"dimension": 5, "shape": {"type": "disjoint_balls", "balls": [
            {"center": [0, 0, 0, 0, 0], "radius": 1},
            {"center": [1.5, 0, 0, 0, 0], "radius": 1},
        ]}})
    assert "overlap" in str(excinfo.value)


def test_underdetermined_fit_rejected(loader):
    with pytest.raises(ValueError):
        loader.validate({"dimension": 6, "shape": {
            "type": "smooth",
            "boundary": {"kind": "ellipsoid", "center": [0] * 6, "semi_axes": [1] * 6},
            "mfs_sources": 500,
            "collocation_points": 100,
        }})


def test_missing_file(loader, tmp_path):
    with pytest.raises(FileNotFoundError):
        loader.load_domain(str(tmp_path / "missing.json"))


def test_smooth_defaults_follow_config(monkeypatch):
    """Test that unset fit settings are read from the green section of the configuration"""
    monkeypatch.setattr(config.green, "mfs_sources", 900)
    monkeypatch.setattr(config.green, "mfs_offset", 2.5)
    monkeypatch.setattr(config.green, "mfs_reference", "none")
    shape = SmoothShape(boundary=EllipsoidBoundary(center=[0] * 6, semi_axes=[1] * 6))
    assert shape.mfs_sources == 900
    assert shape.mfs_offset == 2.5
    assert shape.reference == "none"
    assert shape.collocation_points == config.green.collocation_points


@pytest.mark.parametrize("modes, fragment", [
    ([{"direction": [1, 0, 0, 0, 0, 0], "degree": 2, "amplitude": 0.6},
      {"direction": [0, 1, 0, 0, 0, 0], "degree": 3, "amplitude": -0.5}], "amplitudes"),
    ([{"direction": [0, 0, 0, 0, 0, 0], "degree": 2, "amplitude": 0.1}], "nonzero"),
    ([{"direction": [1, 0, 0], "degree": 2, "amplitude": 0.1}], "shape.boundary.modes.0.direction"),
    ([{"direction": [1, 0, 0, 0, 0, 0], "degree": 0, "amplitude": 0.1}], "degree"),
])
def test_star_boundary_rejected(loader, modes, fragment):
    """Test the radial-function checks of star-shaped boundaries"""
    with pytest.raises(ValueError) as excinfo:
        loader.validate({"dimension": 6, "shape": {
            "type": "smooth",
            "boundary": {"kind": "star", "center": [0] * 6, "radius": 1, "modes": modes},
        }})
    assert fragment in str(excinfo.value)

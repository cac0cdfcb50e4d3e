import json

import numpy as np
import pytest
from dotenv import load_dotenv

from reduction.bubble import UniversalConstants
from reduction.critical import SearchConfig
from reduction.green import ImageChargeProvider
from reduction.mfs import FundamentalSolutionProvider
from schemas.domain_schema import ball_domain, disjoint_balls_domain
from tests.helpers import axis_point, smooth_spec, star_spec

N = 6


@pytest.fixture(autouse=True)
def load_env():
    """Load environment variables for testing"""
    load_dotenv()


@pytest.fixture
def consts6():
    return UniversalConstants.for_dimension(N)


@pytest.fixture(scope="session")
def ball6():
    """Unit ball in R^6 with the closed-form provider"""
    return ImageChargeProvider(ball_domain(N))


@pytest.fixture(scope="session")
def two_balls6():
    """Two unit balls at center distance 4"""
    return ImageChargeProvider(disjoint_balls_domain(N, [axis_point(N, -2.0), axis_point(N, 2.0)]))


@pytest.fixture(scope="session")
def three_balls6():
    """Three unit balls on a line, neighbours at center distance 4"""
    centers = [axis_point(N, -4.0), axis_point(N, 0.0), axis_point(N, 4.0)]
    return ImageChargeProvider(disjoint_balls_domain(N, centers))


@pytest.fixture(scope="session")
def mfs_ball6():
    """Unit ball handled by the fundamental-solution provider"""
    return FundamentalSolutionProvider(smooth_spec([1.0] * N))


@pytest.fixture(scope="session")
def mfs_ball6_direct():
    """Unit ball with H itself fitted, no reference ball"""
    return FundamentalSolutionProvider(smooth_spec([1.0] * N, 1000, 2500, reference="none"))


@pytest.fixture(scope="session")
def mfs_ellipsoid6():
    """Ellipsoid flattened to 0.95 along the last axis, default fit tolerance"""
    return FundamentalSolutionProvider(smooth_spec([1.0, 1.0, 1.0, 1.0, 1.0, 0.95], 1400, 3500))


@pytest.fixture(scope="session")
def mfs_star6():
    """Star-shaped domain r(u) = 1 + 0.04 (u . d)^2 with d tilted between the last two axes"""
    tilt = axis_point(N, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0)
    return FundamentalSolutionProvider(star_spec(N, [(tilt, 2, 0.04)], sources=1400, collocation=3500))


@pytest.fixture
def quick_search():
    """Search settings small enough for unit tests"""
    return SearchConfig(starts=40, seed=7, n_jobs=1)


@pytest.fixture
def ball_domain_file(tmp_path):
    """DomainSpec JSON for the unit ball in R^6"""
    path = tmp_path / "ball6.json"
    path.write_text(json.dumps({"dimension": N, "shape": {"type": "ball", "center": [0.0] * N, "radius": 1.0}}))
    return str(path)

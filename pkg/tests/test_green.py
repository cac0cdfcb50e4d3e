import math
import pickle

import numpy as np
import pytest
from scipy.optimize import minimize

from reduction.errors import DomainError, FitFailureError, SingularityError
from reduction.green import ImageChargeProvider, make_provider
from reduction.mfs import FundamentalSolutionProvider
from schemas.domain_schema import ball_domain
from tests.helpers import axis_point, smooth_spec
from utils.random_sampler import DomainSampler

C6 = 1.0 / (4.0 * math.pi ** 3)


def ball_robin(x):
    return C6 * (1.0 - float(np.dot(x, x))) ** -4


def test_ball_robin_closed_form(ball6):
    """Test R(x) = c_N (1 - |x|^2)^{2-N} on the unit ball"""
    for x in [np.zeros(6), axis_point(6, 0.3), axis_point(6, 0.2, -0.4, 0.1)]:
        assert ball6.robin_value(x) == pytest.approx(ball_robin(x), rel=1e-12)


def test_robin_derivatives_closed_form(ball6):
    """Test the Robin gradient and Hessian against the differentiated closed form"""
    x = axis_point(6, 0.3, 0.1)
    s = 1.0 - float(x @ x)
    evaluation = ball6.robin(x)
    expected_grad = 8.0 * C6 * s ** -5 * x
    expected_hess = 8.0 * C6 * (s ** -5 * np.eye(6) + 10.0 * s ** -6 * np.outer(x, x))
    np.testing.assert_allclose(evaluation.gradient, expected_grad, rtol=1e-10)
    np.testing.assert_allclose(evaluation.hessian, expected_hess, rtol=1e-10)
    assert not evaluation.near_boundary


def test_green_symmetry_and_positivity(ball6):
    """Test G(x, y) = G(y, x) > 0 for interior points"""
    sampler = DomainSampler(3)
    points = ball6.sample_interior(sampler, 20, 0.1)
    for x, y in zip(points[:10], points[10:]):
        forward = ball6.green(x, y)
        assert forward > 0
        assert forward == pytest.approx(ball6.green(y, x), rel=1e-12)


def test_green_harmonic_in_target(ball6):
    """Test that the trace of the target Hessian vanishes"""
    x = axis_point(6, 0.3)
    targets = np.array([axis_point(6, -0.2, 0.4), axis_point(6, 0.5, 0.5), axis_point(6, 0.0, 0.0, 0.7)])
    jet = ball6.green_jet(x, targets, order=2)
    laplacian = np.trace(jet.hess_yy, axis1=1, axis2=2)
    scale = np.abs(jet.hess_yy).max()
    assert np.all(np.abs(laplacian) < 1e-10 * scale)


def test_green_vanishes_on_boundary(ball6):
    """Test that G(x, y) goes to zero as y approaches the boundary"""
    x = axis_point(6, 0.3)
    near = ball6.green_jet(x, axis_point(6, 0.0, 1.0 - 1e-9)[None, :], order=0).value[0]
    assert abs(near) < 1e-6 * ball6.green(x, axis_point(6, 0.0, 0.5))


def test_jet_matches_finite_differences(ball6):
    """Test the mixed Hessian block against differenced gradients"""
    x = axis_point(6, 0.2, -0.1)
    y = axis_point(6, -0.3, 0.25, 0.1)
    step = 1e-6
    jet = ball6.green_jet(x, y[None, :], order=2)
    for p in range(6):
        shift = np.zeros(6)
        shift[p] = step
        upper = ball6.green_jet(x + shift, y[None, :], order=1).grad_y[0]
        lower = ball6.green_jet(x - shift, y[None, :], order=1).grad_y[0]
        np.testing.assert_allclose((upper - lower) / (2 * step), jet.hess_xy[0, p], rtol=1e-5, atol=1e-8)


def test_robin_minimum_at_center(ball6):
    """Test that trust-region minimization of R from 50 random starts ends at the center"""
    starts = ball6.sample_interior(DomainSampler(50), 50, 0.3)
    for start in starts:
        result = minimize(
            ball6.robin_value,
            start,
            jac=lambda x: ball6.robin(x).gradient,
            hess=lambda x: ball6.robin(x).hessian,
            method="trust-exact",
        )
        x = result.x
        # Newton on the analytic gradient removes the optimizer's stopping error
        for _ in range(3):
            evaluation = ball6.robin(x)
            x = x - np.linalg.solve(evaluation.hessian, evaluation.gradient)
        assert np.linalg.norm(x) < 1e-10


def test_domain_errors(ball6):
    """Test boundary, exterior and coincident evaluations"""
    with pytest.raises(DomainError):
        ball6.robin_value(axis_point(6, 1.0))
    with pytest.raises(DomainError):
        ball6.green(axis_point(6, 1.5), np.zeros(6))
    with pytest.raises(SingularityError):
        ball6.green(axis_point(6, 0.3), axis_point(6, 0.3))


def test_near_boundary_flag(ball6):
    """Test the warning flag inside the boundary margin"""
    assert ball6.require_interior(axis_point(6, 1.0 - 1e-4))
    assert not ball6.require_interior(axis_point(6, 0.5))


def test_disjoint_components(two_balls6):
    """Test that G vanishes across components and H equals S there"""
    x = axis_point(6, -2.0)
    y = axis_point(6, 2.3)
    assert two_balls6.green(x, y) == 0.0
    regular = two_balls6.regular_values(x, y[None, :])[0]
    assert regular == pytest.approx(C6 * 4.3 ** -4, rel=1e-12)
    # Check each ball carries its own Robin function
    assert two_balls6.robin_value(x) == pytest.approx(C6, rel=1e-12)
    assert two_balls6.robin_value(axis_point(6, 2.0)) == pytest.approx(C6, rel=1e-12)


def test_make_provider_dispatch(mfs_ball6):
    assert isinstance(make_provider(ball_domain(6)), ImageChargeProvider)
    assert isinstance(mfs_ball6, FundamentalSolutionProvider)


def test_mfs_ball_matches_image_charges(ball6, mfs_ball6):
    """Test fitted Robin values against the exact ball at 50 interior points"""
    sampler = DomainSampler(11)
    points = ball6.sample_interior(sampler, 50, 0.2)
    for x in points:
        assert mfs_ball6.robin_value(x) == pytest.approx(ball6.robin_value(x), rel=1e-4)


def test_mfs_direct_fit_matches_image_charges(ball6, mfs_ball6_direct):
    """Test a fit of H itself, with nonzero charges, against the exact ball"""
    points = ball6.sample_interior(DomainSampler(12), 10, 0.9)
    for x in points:
        assert mfs_ball6_direct.robin_value(x) == pytest.approx(ball6.robin_value(x), rel=1e-4)
        assert mfs_ball6_direct.boundary_residual(x) < 1e-6
        assert np.abs(mfs_ball6_direct.charges(x)[0]).max() > 1e-3

    # Check the regular part away from the diagonal too
    x = axis_point(6, 0.05)
    targets = np.array([axis_point(6, -0.3, 0.2), axis_point(6, 0.0, 0.0, 0.5)])
    np.testing.assert_allclose(mfs_ball6_direct.regular_values(x, targets), ball6.regular_values(x, targets),
                               rtol=1e-4)


@pytest.mark.parametrize("pole", [np.zeros(6), axis_point(6, 0.05), axis_point(6, 0, 0, 0, 0, 0, 0.05)])
def test_mfs_ellipsoid_boundary_residual(mfs_ellipsoid6, pole):
    """Test max |G(x, .)| < 1e-6 on held-out boundary points of the ellipsoid"""
    assert mfs_ellipsoid6.boundary_residual(pole) < 1e-6


def test_mfs_ellipsoid_symmetry(mfs_ellipsoid6):
    """Test G(x, y) = G(y, x) for the fitted ellipsoid"""
    x = axis_point(6, 0.05)
    y = axis_point(6, 0.0, -0.05)
    assert mfs_ellipsoid6.green(x, y) == pytest.approx(mfs_ellipsoid6.green(y, x), rel=1e-6)


@pytest.mark.parametrize("x", [np.zeros(6), axis_point(6, 0.05)])
def test_mfs_ellipsoid_robin_between_balls(mfs_ellipsoid6, x):
    """Test R_B(1) < R < R_B(0.95) for the ellipsoid between the two balls"""
    outer = ImageChargeProvider(ball_domain(6, 1.0)).robin_value(x)
    inner = ImageChargeProvider(ball_domain(6, 0.95)).robin_value(x)
    assert outer < mfs_ellipsoid6.robin_value(x) < inner


def test_star_domain_fit(mfs_star6):
    """Test the fitted star-shaped domain against the balls it lies between"""
    assert mfs_star6.boundary_residual(np.zeros(6)) < 1e-6
    assert mfs_star6.diameter == pytest.approx(2.08)

    x = axis_point(6, 0.05)
    inner_ball = ImageChargeProvider(ball_domain(6, 1.0)).robin_value(x)
    outer_ball = ImageChargeProvider(ball_domain(6, 1.04)).robin_value(x)
    assert outer_ball < mfs_star6.robin_value(x) < inner_ball


def test_star_domain_geometry(mfs_star6):
    """Test inside tests and interior sampling of the star-shaped domain"""
    tilt = axis_point(6, 0, 0, 0, 0, 1.0, 1.0) / math.sqrt(2.0)
    assert mfs_star6.contains(1.03 * tilt)
    assert not mfs_star6.contains(1.03 * axis_point(6, 1.0))
    assert mfs_star6.component_of(np.array([1.05 * tilt])).tolist() == [-1]

    points = mfs_star6.sample_interior(DomainSampler(8), 200, 0.1)
    assert points.shape == (200, 6)
    assert np.all(mfs_star6.surface.gauge(points) <= 0.9)
    assert np.all(mfs_star6.boundary_distance(points) > 0)


@pytest.mark.parametrize("provider", ["ball6", "mfs_ellipsoid6"])
def test_regular_part_laplacian_by_differences(provider, request):
    """Test that the five-point-per-axis Laplacian of H(x, .) vanishes"""
    g = request.getfixturevalue(provider)
    x = axis_point(6, 0.05, 0.02)
    y = axis_point(6, -0.2, 0.1, 0.0, 0.15)
    h = 1e-3
    shifts = np.vstack([np.zeros(6), h * np.eye(6), -h * np.eye(6)])
    values = g.regular_values(x, y + shifts)
    second = (values[1:7] - 2.0 * values[0] + values[7:]) / h ** 2
    assert abs(second.sum()) < 1e-4 * np.abs(second).sum()


def test_mfs_fit_failure():
    """Test that an unreachable tolerance raises FitFailureError"""
    provider = FundamentalSolutionProvider(smooth_spec([1.0, 1.0, 1.0, 1.0, 1.0, 0.6], 60, 120),
                                           fit_tolerance=1e-14)
    with pytest.raises(FitFailureError) as excinfo:
        provider.robin_value(axis_point(6, 0.1))
    assert excinfo.value.residual > 1e-14


def test_mfs_provider_pickles(mfs_ball6):
    """Test that a provider survives pickling with a fresh cache"""
    x = axis_point(6, 0.1)
    value = mfs_ball6.robin_value(x)
    clone = pickle.loads(pickle.dumps(mfs_ball6))
    assert clone._cache == {}
    assert clone.robin_value(x) == pytest.approx(value, rel=1e-12)

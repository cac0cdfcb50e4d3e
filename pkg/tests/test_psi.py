import math

import numpy as np
import pytest
from scipy import optimize

from reduction.errors import SingularityError
from reduction.psi import (
    PeakConfig,
    balance_lhs,
    is_positive,
    m_matrix,
    psi_derivatives,
    psi_grad,
    psi_hess,
    psi_value,
)
from tests.helpers import axis_point
from utils.random_sampler import DomainSampler

LAMBDA_STAR = 1.0 / math.sqrt(48.0)


def random_configs(g, count, seed):
    """Two-peak configurations with separated peaks and scales near the balance scale"""
    sampler = DomainSampler(seed)
    configs = []
    while len(configs) < count:
        points = g.sample_interior(sampler, 2, 0.4)
        if np.linalg.norm(points[0] - points[1]) < 0.3:
            continue
        configs.append(PeakConfig(points, LAMBDA_STAR * sampler.log_uniform(2, 0.5, 2.0)))
    return configs


def central_gradient(g, c, consts, step):
    z = c.to_vector()
    grad = np.zeros_like(z)
    for i in range(len(z)):
        h = step * (1.0 if i < c.k * c.dimension else z[i])
        up, down = z.copy(), z.copy()
        up[i] += h
        down[i] -= h
        grad[i] = (psi_value(g, PeakConfig.from_vector(up, c.k, c.dimension), consts)
                   - psi_value(g, PeakConfig.from_vector(down, c.k, c.dimension), consts)) / (2 * h)
    return grad


def central_hessian(g, c, consts, step):
    z = c.to_vector()
    hess = np.zeros((len(z), len(z)))
    for i in range(len(z)):
        h = step * (1.0 if i < c.k * c.dimension else z[i])
        up, down = z.copy(), z.copy()
        up[i] += h
        down[i] -= h
        hess[i] = (psi_grad(g, PeakConfig.from_vector(up, c.k, c.dimension), consts)
                   - psi_grad(g, PeakConfig.from_vector(down, c.k, c.dimension), consts)) / (2 * h)
    return 0.5 * (hess + hess.T)


def test_single_peak_value(ball6, consts6):
    """Test Psi_1 = A^2 R lam^{N-2} - B lam^2 at the ball center"""
    c = PeakConfig(np.zeros((1, 6)), [0.3])
    robin = ball6.robin_value(np.zeros(6))
    expected = consts6.a_const ** 2 * robin * 0.3 ** 4 - consts6.b_const * 0.09
    assert psi_value(ball6, c, consts6) == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("domain", ["ball6", "two_balls6"])
def test_gradient_matches_central_differences(domain, consts6, request):
    """Test the analytic gradient at 20 random configurations per domain"""
    g = request.getfixturevalue(domain)
    for c in random_configs(g, 20, seed=5):
        analytic = psi_grad(g, c, consts6)
        numeric = central_gradient(g, c, consts6, 1e-6)
        assert np.linalg.norm(analytic - numeric) < 1e-5 * np.linalg.norm(analytic)


@pytest.mark.parametrize("domain", ["ball6", "two_balls6"])
def test_hessian_matches_differenced_gradient(domain, consts6, request):
    """Test the analytic Hessian at 20 random configurations per domain"""
    g = request.getfixturevalue(domain)
    for c in random_configs(g, 20, seed=9):
        analytic = psi_hess(g, c, consts6)
        numeric = central_hessian(g, c, consts6, 1e-6)
        np.testing.assert_allclose(analytic, analytic.T)
        assert np.linalg.norm(analytic - numeric) < 1e-4 * np.linalg.norm(analytic)


def test_derivatives_in_one_pass(ball6, consts6):
    """Test that the combined evaluation agrees with the single-purpose calls"""
    c = random_configs(ball6, 1, seed=2)[0]
    value, grad, hess = psi_derivatives(ball6, c, consts6, order=2)
    assert value == pytest.approx(psi_value(ball6, c, consts6), rel=1e-12)
    np.testing.assert_allclose(grad, psi_grad(ball6, c, consts6), rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(hess, psi_hess(ball6, c, consts6), rtol=1e-12, atol=1e-12)


def test_permutation_invariance(ball6, consts6):
    """Test that relabelling peaks leaves Psi unchanged"""
    c = random_configs(ball6, 1, seed=4)[0]
    assert psi_value(ball6, c.permuted([1, 0]), consts6) == pytest.approx(psi_value(ball6, c, consts6), rel=1e-13)


def test_m_matrix_structure(ball6):
    """Test diagonal Robin values and negative mutual Green values"""
    points = np.array([axis_point(6, 0.3), axis_point(6, -0.4, 0.2)])
    m = m_matrix(ball6, points)
    assert m.entries[0, 0] == pytest.approx(ball6.robin_value(points[0]))
    assert m.entries[0, 1] == pytest.approx(-ball6.green(points[0], points[1]))
    np.testing.assert_allclose(m.entries, m.entries.T)
    assert m.smallest_eigenvalue == pytest.approx(np.linalg.eigvalsh(m.entries)[0])


def test_m_matrix_positivity(ball6, two_balls6):
    """Test positivity for separated peaks and its failure for close peaks"""
    far = m_matrix(two_balls6, np.array([axis_point(6, -2.0), axis_point(6, 2.0)]))
    assert is_positive(far)
    close = m_matrix(ball6, np.array([axis_point(6, 0.05), axis_point(6, -0.05)]))
    assert not is_positive(close)


def test_positivity_threshold_separation(ball6):
    """Test the separation at which M_2 of two symmetric peaks in the ball turns positive"""
    def smallest(gap):
        return m_matrix(ball6, np.array([axis_point(6, gap / 2), axis_point(6, -gap / 2)])).smallest_eigenvalue

    threshold = optimize.bisect(smallest, 0.01, 1.0, xtol=1e-10)
    assert 0.7 < threshold < 0.9
    assert smallest(0.9 * threshold) < 0
    assert smallest(1.1 * threshold) > 0
    assert not is_positive(m_matrix(ball6, np.array([axis_point(6, 0.45 * threshold), axis_point(6, -0.45 * threshold)])))


def test_coincident_peaks_rejected(ball6):
    with pytest.raises(SingularityError):
        m_matrix(ball6, np.array([axis_point(6, 0.1), axis_point(6, 0.1)]))


def test_balance_at_ball_center(ball6, consts6):
    """Test that the balance expression equals one at the closed-form scale"""
    c = PeakConfig(np.zeros((1, 6)), [LAMBDA_STAR])
    np.testing.assert_allclose(balance_lhs(ball6, c, consts6), [1.0], rtol=1e-13)
    assert np.linalg.norm(psi_grad(ball6, c, consts6)) < 1e-9 * consts6.b_const * LAMBDA_STAR


def test_peak_config_validation():
    with pytest.raises(ValueError):
        PeakConfig(np.zeros((2, 6)), [1.0])
    with pytest.raises(ValueError):
        PeakConfig(np.zeros((1, 6)), [-1.0])

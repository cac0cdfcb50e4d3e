import math

import numpy as np
import pytest

from reduction.errors import InvalidDimensionError, NearPeakError
from reduction.predictor import (
    VALIDITY_N5,
    VALIDITY_OK,
    approximate_field,
    default_exclusion_radius,
    far_field,
    predict,
)
from reduction.psi import PeakConfig
from tests.helpers import axis_point

N = 6
LAMBDA_STAR = 1.0 / math.sqrt(48.0)


@pytest.fixture
def center_peak():
    return PeakConfig(np.zeros((1, N)), [LAMBDA_STAR])


def test_scaling_law(center_peak):
    """Test lambda_eps(s eps) = s^{-1/(N-4)} lambda_eps(eps) over five decades"""
    base = predict(center_peak, 1e-1, N).lambdas[0]
    for s in [1e-1, 1e-2, 1e-3, 1e-4, 1e-5]:
        scaled = predict(center_peak, s * 1e-1, N).lambdas[0]
        assert scaled == pytest.approx(s ** (-1.0 / (N - 4)) * base, rel=1e-12)


def test_prediction_fields(center_peak):
    """Test scale, height and the validity note"""
    pred = predict(center_peak, 1e-4, N)
    peak = pred.per_peak[0]
    assert peak.lambda_eps == pytest.approx(100.0 / LAMBDA_STAR)
    assert peak.height == pytest.approx(peak.lambda_eps ** 2)
    assert pred.validity_note == VALIDITY_OK
    assert pred.error_order() == pytest.approx(peak.lambda_eps ** -4)
    assert pred.to_dict()["per_peak"][0]["location"] == [0.0] * N


def test_dimension_checks(center_peak):
    """Test refusal of N <= 4 and of mismatched dimensions"""
    with pytest.raises(InvalidDimensionError):
        predict(PeakConfig(np.zeros((1, 4)), [1.0]), 1e-2, 4)
    with pytest.raises(InvalidDimensionError):
        predict(center_peak, 1e-2, 7)
    with pytest.raises(ValueError):
        predict(center_peak, 0.0, N)


def test_dimension_five_flagged():
    """Test the reliability warning in dimension five"""
    pred = predict(PeakConfig(np.zeros((1, 5)), [1.0]), 1e-2, 5)
    assert pred.validity_note == VALIDITY_N5
    assert pred.lambdas[0] == pytest.approx(100.0)


def test_far_field(ball6, consts6, center_peak):
    """Test A G(a, x) / lambda_eps^{(N-2)/2} away from the peak"""
    pred = predict(center_peak, 1e-4, N)
    x = axis_point(N, 0.5)
    expected = consts6.a_const * ball6.green(np.zeros(N), x) / pred.lambdas[0] ** 2
    assert far_field(ball6, pred, x, consts6) == pytest.approx(expected, rel=1e-12)


def test_far_field_near_peak(ball6, consts6, center_peak):
    pred = predict(center_peak, 1e-4, N)
    assert default_exclusion_radius(ball6, pred) == pytest.approx(0.1)
    with pytest.raises(NearPeakError):
        far_field(ball6, pred, axis_point(N, 0.05), consts6)


def test_approximate_field_matches_far_field(ball6, consts6, center_peak):
    """Test the projected bubble sum against the far-field term and the peak height"""
    pred = predict(center_peak, 1e-4, N)
    x = axis_point(N, 0.5)
    samples = approximate_field(ball6, pred, np.array([np.zeros(N), x]))
    assert samples.values[1] == pytest.approx(far_field(ball6, pred, x, consts6), rel=5e-2)

    # Check the peak value is C_N lambda_eps^{(N-2)/2}
    assert samples.values[0] == pytest.approx(24.0 * pred.lambdas[0] ** 2, rel=1e-6)
    assert samples.metadata["neglected_remainder_size"] == pytest.approx(pred.error_order())
    assert samples.metadata["prediction"]["epsilon"] == 1e-4


def test_other_component_is_negligible(two_balls6):
    """Test that a peak in one ball barely changes the field in the other"""
    both = PeakConfig(np.array([axis_point(N, -2.0), axis_point(N, 2.0)]), [LAMBDA_STAR, LAMBDA_STAR])
    right = PeakConfig(axis_point(N, 2.0)[None, :], [LAMBDA_STAR])
    x = axis_point(N, 2.5)
    combined = approximate_field(two_balls6, predict(both, 1e-4, N), x).values[0]
    alone = approximate_field(two_balls6, predict(right, 1e-4, N), x).values[0]
    assert combined == pytest.approx(alone, rel=1e-8)


def test_field_frame(ball6, center_peak):
    """Test the tabular form of sampled fields"""
    pred = predict(center_peak, 1e-2, N)
    samples = approximate_field(ball6, pred, [axis_point(N, 0.2), axis_point(N, -0.2)])
    frame = samples.to_frame()
    assert list(frame.columns) == [f"x{i}" for i in range(1, N + 1)] + ["value"]
    assert len(frame) == 2
    assert frame["value"].iloc[0] == pytest.approx(frame["value"].iloc[1])


def test_far_field_vanishes_at_boundary(ball6, consts6, center_peak):
    """Test that the far field decays to zero towards the boundary"""
    pred = predict(center_peak, 1e-4, N)
    inner = far_field(ball6, pred, axis_point(N, 0.5), consts6)
    edge = far_field(ball6, pred, axis_point(N, 1.0 - 1e-6), consts6)
    assert 0 <= edge < 1e-4 * inner

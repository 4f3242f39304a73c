"""Constant-velocity filter behavior at its limit cases."""
import numpy as np
import pytest

from photontrack.errors import SingularInnovationError
from photontrack.kalman import (
    KalmanParams,
    KalmanState,
    bbox_kf_init,
    bbox_kf_predict,
    bbox_kf_update,
    centroid_gate,
    kf_init,
    kf_predict,
    kf_update,
)
from photontrack.labeling import BoundingBox


def test_init_state():
    s = kf_init(np.array([1.0, 2.0, 3.0]), KalmanParams())
    assert s.dim == 3
    np.testing.assert_array_equal(s.position, [1, 2, 3])
    np.testing.assert_array_equal(s.velocity, [0, 0, 0])
    np.testing.assert_array_equal(np.diag(s.P), [1, 1, 1, 10, 10, 10])


def test_predict_moves_by_velocity():
    s = kf_init(np.zeros(3), KalmanParams())
    s = KalmanState(x=np.array([0.0, 0, 0, 1.0, 2.0, 3.0]), P=s.P, params=s.params)
    pred, s2 = kf_predict(s, dt=2.0)
    np.testing.assert_allclose(pred, [2, 4, 6])
    np.testing.assert_allclose(s2.velocity, [1, 2, 3])


def test_predict_rejects_sub_step_dt():
    s = kf_init(np.zeros(3), KalmanParams())
    with pytest.raises(ValueError):
        kf_predict(s, dt=0.5)


def test_predict_inflates_uncertainty():
    s = kf_init(np.zeros(3), KalmanParams())
    _, s2 = kf_predict(s)
    assert np.all(np.diag(s2.P) >= np.diag(s.P))


def test_update_with_huge_r_barely_moves():
    params = KalmanParams(r=1e9)
    s = kf_init(np.zeros(3), params)
    _, s = kf_predict(s)
    s2 = kf_update(s, np.array([5.0, 5.0, 5.0]))
    assert np.abs(s2.position).max() < 1e-6


def test_update_with_tiny_r_snaps_to_measurement():
    params = KalmanParams(r=1e-9)
    s = kf_init(np.zeros(3), params)
    _, s = kf_predict(s)
    z = np.array([5.0, -2.0, 1.0])
    s2 = kf_update(s, z)
    np.testing.assert_allclose(s2.position, z, atol=1e-6)


def test_update_keeps_covariance_symmetric():
    rng = np.random.default_rng(0)
    s = kf_init(rng.normal(size=3), KalmanParams())
    for _ in range(30):
        _, s = kf_predict(s)
        s = kf_update(s, rng.normal(size=3))
        assert np.abs(s.P - s.P.T).max() < 1e-12


def test_update_rejects_wrong_dimension():
    s = kf_init(np.zeros(3), KalmanParams())
    with pytest.raises(ValueError):
        kf_update(s, np.zeros(2))


def test_singular_innovation_detected():
    params = KalmanParams(r=0.0)
    P = np.diag([1.0, 1e-30, 1.0, 1.0, 1.0, 1.0])
    s = KalmanState(x=np.zeros(6), P=P, params=params)
    with pytest.raises(SingularInnovationError):
        kf_update(s, np.zeros(3))


def test_gate_boundary_is_inclusive():
    p = np.zeros(3)
    q = np.array([3.0, 4.0, 0.0])
    assert centroid_gate(p, q, 5.0)
    assert not centroid_gate(p, q, 5.0 - 1e-9)
    with pytest.raises(ValueError):
        centroid_gate(p, q, 0.0)
    with pytest.raises(ValueError):
        centroid_gate(p, np.zeros(2), 1.0)


def test_params_validation():
    with pytest.raises(ValueError):
        KalmanParams(q=-1)
    with pytest.raises(ValueError):
        KalmanParams(p0_pos=0)


def test_bbox_filter_bank_tracks_a_drifting_box():
    params = KalmanParams()
    filters = bbox_kf_init(BoundingBox((0, 0, 0), (2, 2, 2)), params)
    assert len(filters) == 6
    for step in range(1, 25):
        preds, filters = bbox_kf_predict(filters)
        assert preds.shape == (6,)
        box = BoundingBox((step, 0, 0), (step + 2, 2, 2))
        filters = bbox_kf_update(filters, box)
    preds, _ = bbox_kf_predict(filters)
    # after many steps at constant drift the x faces are predicted ahead
    assert preds[0] == pytest.approx(25.0, abs=0.05)
    assert preds[3] == pytest.approx(27.0, abs=0.05)
    assert preds[1] == pytest.approx(0.0, abs=0.05)

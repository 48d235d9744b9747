import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uavbeam.errors import DomainError
from uavbeam.kalman import (
    KalmanState,
    KalmanTracker,
    baseline_predict,
    init_two_point,
    kf_predict,
    kf_update,
    process_noise,
)
from uavbeam.scenario import ScenarioConfig, generate_trajectory

DT = 0.02


def test_two_point_init():
    s = init_two_point((0, 0), (0.5, 0.2), DT)
    assert np.allclose(s.velocity, [25, 10])
    assert np.allclose(init_two_point((1, 1), (1, 1), DT).velocity, 0)
    assert s.covariance[2, 2] == pytest.approx(0.5)
    assert s.covariance[3, 3] == pytest.approx(0.5)
    assert np.all(np.linalg.eigvalsh(s.covariance) >= -1e-15)


def test_predict():
    s = KalmanState(np.array([0, 0, 25, 10.0]), np.eye(4))
    assert kf_predict(s, DT).position == pytest.approx((0.5, 0.2))


def test_predict_zero_q_adds_nothing():
    s = init_two_point((0, 0), (0.5, 0.2), DT)
    assert np.all(process_noise(DT, 0.0) == 0)
    twice = kf_predict(kf_predict(s, DT, q=0.0), DT, q=0.0)
    once = kf_predict(s, 2 * DT, q=0.0)
    assert np.allclose(twice.state, once.state, rtol=0, atol=1e-12)
    assert np.allclose(twice.covariance, once.covariance, rtol=0, atol=1e-12)


def test_update_zero_innovation():
    s = init_two_point((0, 0), (0.5, 0.2), DT)
    p = kf_predict(s, DT)
    assert kf_update(p, p.state[:2], r=0.3).position == pytest.approx(p.position)


def test_update_perfect_measurement():
    s = kf_predict(init_two_point((0, 0), (0.5, 0.2), DT), DT)
    post = kf_update(s, (7.0, -3.0), r=1e-14)
    assert post.position == pytest.approx((7.0, -3.0), abs=1e-9)


def test_update_gain_half():
    s = KalmanState(np.zeros(4), np.eye(4))
    post = kf_update(s, (2.0, -4.0), r=1.0)
    assert post.position == pytest.approx((1.0, -2.0))
    assert post.covariance[0, 0] == pytest.approx(0.5)


def test_baseline_predict():
    assert baseline_predict([(0, 0), (0.5, 0.2)], DT) == pytest.approx((1.0, 0.4))
    assert baseline_predict([(3, 3), (3, 3)], DT) == pytest.approx((3, 3))
    with pytest.raises(DomainError):
        baseline_predict([(0, 0)], DT)


@given(st.floats(0.1, 1.0), st.floats(-3.0, 3.0), st.integers(0, 1000))
@settings(max_examples=20, deadline=None)
def test_exact_on_constant_velocity(speed, heading, seed):
    cfg = ScenarioConfig(speed_lo=speed, speed_hi=speed, heading_lo=heading, heading_hi=heading, sigma_v=0.0,
                         uav_start=(15, 15), k_slots=60)
    try:
        p = generate_trajectory(cfg, seed=seed).positions
    except Exception:
        return  # trajectory passes over the UE; not what this property is about
    for k in range(2, len(p)):
        pred = baseline_predict(p[k - 2:k], DT)
        assert np.hypot(pred.x - p[k, 0], pred.y - p[k, 1]) <= 1e-9


def test_tracker():
    p = np.array([[0.5 * k, 0.2 * k] for k in range(10)])
    t = KalmanTracker(DT, q=1.0, r=1e-4)
    with pytest.raises(DomainError):
        t.predict()
    for u in p[:6]:
        t.observe(u)
    assert t.predict() == pytest.approx(tuple(p[6]), abs=1e-9)
    t.skip()
    assert t.predict() == pytest.approx(tuple(p[7]), abs=1e-9)
    t.observe(p[7])
    assert t.predict(2) == pytest.approx(tuple(p[9]), abs=1e-9)

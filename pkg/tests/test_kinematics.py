import pytest
from hypothesis import given, strategies as st

from socialgame.kinematics import VehicleState, clamped_motion, step_kinematics


def make_state(v=4.0, s=0.0):
    return VehicleState(role="left", s=s, v=v)


def test_plain_acceleration_step():
    out = step_kinematics(make_state(v=4.0), accel=1.0, dt=0.1, v_bounds=(0.0, 5.0))
    assert out.v == pytest.approx(4.1)
    assert out.s == pytest.approx(0.405)


def test_constant_speed_step():
    out = step_kinematics(make_state(v=4.0), accel=0.0, dt=0.1)
    assert out.v == 4.0
    assert out.s == pytest.approx(0.4)


def test_step_splits_at_the_speed_cap():
    # 4.95 -> 5.0 after 0.05 s, then 0.05 s at the cap.
    out = step_kinematics(make_state(v=4.95), accel=1.0, dt=0.1, v_bounds=(0.0, 5.0))
    assert out.v == 5.0
    assert out.s == pytest.approx(0.5 * (4.95 + 5.0) * 0.05 + 5.0 * 0.05)


def test_step_splits_at_the_stop_instant():
    v, ds = clamped_motion(1.0, -20.0, 0.1)
    assert v == 0.0
    assert ds == pytest.approx(1.0 / 40.0)


def test_yield_from_standstill_stays_put():
    out = step_kinematics(make_state(v=0.0), accel=-2.0, dt=0.1)
    assert out.v == 0.0
    assert out.s == 0.0


@given(
    v0=st.floats(0.0, 12.0),
    accel=st.floats(-5.0, 5.0),
    dt=st.floats(0.01, 1.0),
    vmax=st.floats(0.5, 15.0),
)
def test_speed_always_within_bounds(v0, accel, dt, vmax):
    out = step_kinematics(make_state(v=min(v0, vmax)), accel, dt, (0.0, vmax))
    assert 0.0 <= out.v <= vmax
    assert out.s >= 0.0  # never reverses


@given(
    v0=st.floats(0.0, 12.0),
    accel=st.floats(-5.0, 5.0),
    dt=st.floats(0.01, 1.0),
)
def test_two_half_steps_compose_to_one(v0, accel, dt):
    bounds = (0.0, 10.0)
    full = step_kinematics(make_state(v=min(v0, 10.0)), accel, dt, bounds)
    half = step_kinematics(make_state(v=min(v0, 10.0)), accel, dt / 2, bounds)
    half2 = step_kinematics(half, accel, dt / 2, bounds)
    assert half2.v == pytest.approx(full.v, abs=1e-9)
    assert half2.s == pytest.approx(full.s, abs=1e-9)


def test_invalid_inputs_rejected():
    with pytest.raises(ValueError):
        VehicleState(role="left", s=0.0, v=-1.0)
    with pytest.raises(ValueError):
        clamped_motion(1.0, 0.0, dt=0.0)
    with pytest.raises(ValueError):
        clamped_motion(1.0, 0.0, dt=1.0, v_min=2.0, v_max=1.0)


def test_footprint_edges():
    state = VehicleState(role="straight", s=10.0, v=5.0, length=4.0)
    assert state.front == 12.0
    assert state.rear == 8.0

import math

import pytest

from rovertwin.core import PhysicsParams, TICK_SECONDS, TwinState
from rovertwin.kinematics import parse_chain
from rovertwin.physics import (
    StepInput,
    derive_dynamic_friction,
    step_world,
    traction_check,
)


def friction_params(mu_s=0.5, mu_d=0.4, torque_max=100.0, radius=0.1) -> PhysicsParams:
    return PhysicsParams(
        gravity=-9.81,
        mu_static=mu_s,
        mu_dynamic=mu_d,
        wheel_torque_max=torque_max,
        rover_mass=10.0,
        wheel_radius=radius,
        wheel_base=0.39,
    )


# ---------------------------------------------------------------------------
# traction_check
# ---------------------------------------------------------------------------


def test_traction_zero_force():
    assert traction_check(0.0, 10.0, -9.81, 0.5) is False


def test_traction_threshold():
    # mu_s * m * |g| = 0.5 * 10 * 9.81 = 49.05 N
    assert traction_check(49.0, 10.0, -9.81, 0.5) is False
    assert traction_check(49.1, 10.0, -9.81, 0.5) is True


def test_traction_requires_positive_mass():
    with pytest.raises(ValueError):
        traction_check(1.0, 0.0, -9.81, 0.5)


# ---------------------------------------------------------------------------
# step_world
# ---------------------------------------------------------------------------


def test_rest_stays_at_rest():
    params = friction_params()
    state = TwinState()
    stepped = step_world(state, StepInput(), params)
    assert stepped.sim_time == state.sim_time + 10_000_000
    stepped.sim_time = state.sim_time
    assert stepped == state


def test_slip_acceleration_is_mu_d_g():
    # commanding a huge speed step from rest breaks traction; the chassis
    # then accelerates at exactly mu_d * |g|
    params = friction_params()
    state = TwinState()
    stepped = step_world(state, StepInput(left=10.0, right=10.0), params)
    v = stepped.omega_left * params.wheel_radius
    assert v == pytest.approx(0.4 * 9.81 * TICK_SECONDS, abs=1e-12)


def test_stop_time_matches_constant_deceleration():
    # braking from 0.5 m/s with mu_d = 0.4: closed form t = v/(mu_d*|g|)
    params = friction_params()
    state = TwinState()
    v0 = 0.5
    state.omega_left = v0 / params.wheel_radius
    state.omega_right = v0 / params.wheel_radius
    expected_t = v0 / (0.4 * 9.81)

    ticks = 0
    while (state.omega_left != 0.0 or state.omega_right != 0.0) and ticks < 1000:
        state = step_world(state, StepInput(left=0.0, right=0.0), params)
        ticks += 1
    assert abs(ticks * TICK_SECONDS - expected_t) <= TICK_SECONDS


def test_static_hold_below_threshold_force():
    # per-wheel torque producing 24.5 N per side (49.0 N total) stays below
    # the 49.05 N breakaway threshold: exactly zero displacement
    params = friction_params()
    torque = 24.5 * params.wheel_radius
    state = TwinState()
    for _ in range(1000):
        state = step_world(state, StepInput(left=torque, right=torque, mode="torque"), params)
    assert state.rover.x == 0.0
    assert state.rover.y == 0.0
    assert state.omega_left == 0.0


def test_breakaway_above_threshold_force():
    params = friction_params()
    torque = 24.55 * params.wheel_radius  # 49.1 N total
    state = TwinState()
    state = step_world(state, StepInput(left=torque, right=torque, mode="torque"), params)
    assert state.rover.x > 0.0


def test_velocity_tracking_reaches_target_exactly():
    params = friction_params()
    state = TwinState()
    target = 0.02  # small step: within one tick of grip force
    state = step_world(state, StepInput(left=target, right=target), params)
    assert state.omega_left * params.wheel_radius == target


def test_torque_limited_ramp():
    # low torque cap: acceleration limited to f_cap / m_side each side
    params = friction_params(torque_max=1.0, radius=0.1)  # f_cap = 10 N < mu_s*N
    state = TwinState()
    state = step_world(state, StepInput(left=1.0, right=1.0), params)
    v = state.omega_left * params.wheel_radius
    assert v == pytest.approx((10.0 / 5.0) * TICK_SECONDS, abs=1e-12)


def test_kinetic_energy_non_increasing_without_drive():
    params = friction_params()
    state = TwinState()
    state.omega_left = 6.0
    state.omega_right = 4.0
    prev = state.omega_left**2 + state.omega_right**2
    for _ in range(200):
        state = step_world(state, StepInput(), params)
        ke = state.omega_left**2 + state.omega_right**2
        assert ke <= prev + 1e-15
        prev = ke
    assert prev == 0.0


from hypothesis import given, settings, strategies as st


@given(
    v0=st.floats(min_value=-1.5, max_value=1.5, allow_nan=False),
    cmd=st.floats(min_value=-1.5, max_value=1.5, allow_nan=False),
    mode=st.sampled_from(["velocity", "torque"]),
)
@settings(max_examples=300)
def test_wheel_force_bounded_by_static_grip(v0, cmd, mode):
    # per-tick velocity change never implies a contact force above mu_s * N
    # (slip bound); in torque mode cmd is scaled into the torque range
    params = friction_params()
    state = TwinState()
    state.omega_left = state.omega_right = v0 / params.wheel_radius
    drive = StepInput(left=cmd, right=cmd, mode=mode) if mode == "velocity" else StepInput(
        left=cmd * 3.0, right=cmd * 3.0, mode="torque"
    )
    stepped = step_world(state, drive, params)
    m_side = params.rover_mass / 2
    f_cap = params.wheel_torque_max / params.wheel_radius
    f_limit = min(f_cap, 0.5 * m_side * 9.81)  # mu_s * N per side
    dv = abs(stepped.omega_left - state.omega_left) * params.wheel_radius
    assert dv * m_side / TICK_SECONDS <= f_limit + 1e-9


def test_slip_force_equals_kinetic_friction_exactly():
    params = friction_params()
    state = TwinState()
    stepped = step_world(state, StepInput(left=5.0, right=5.0), params)
    dv = stepped.omega_left * params.wheel_radius
    f = dv * (params.rover_mass / 2) / TICK_SECONDS
    assert abs(f - 0.4 * (params.rover_mass / 2) * 9.81) <= 1e-9


def test_step_world_deterministic():
    params = friction_params()

    def run():
        state = TwinState()
        out = []
        for k in range(300):
            cmd = 0.5 if k < 150 else -0.2
            state = step_world(state, StepInput(left=cmd, right=0.8 * cmd), params)
            out.append((state.rover.x, state.rover.y, state.rover.heading, state.omega_left))
        return out

    assert run() == run()


def test_grasped_antenna_rides_the_gripper(default_config):
    from rovertwin.core import AntennaNode, Pose2D
    from rovertwin.physics import update_grasp_state

    chain = default_config.chain
    params = default_config.physics
    state = TwinState()
    # place the antenna exactly at the zero-pose gripper position
    reach = sum(link.offset[0] for link in chain.links) + chain.gripper_offset[0]
    state.antennas = [
        AntennaNode(
            id="a1",
            pose=Pose2D(x=reach, y=0.0, heading=0.0),
            orientation=0.5,
            target_orientation=1.0,
            tolerance=0.1,
        )
    ]
    state.arm.gripper = 0.0
    events = update_grasp_state(state, chain)
    assert events == [("grasped", "a1")]

    # drive straight: the antenna must translate with the rover
    for _ in range(100):
        state = step_world(state, StepInput(left=0.3, right=0.3), params, chain)
    assert state.antennas[0].pose.x == pytest.approx(reach + state.rover.x, abs=1e-9)
    assert state.antennas[0].orientation == pytest.approx(0.5, abs=1e-9)

    # release: antenna stays where it is
    state.arm.gripper = 1.0
    events = update_grasp_state(state, chain)
    assert events == [("released", "a1")]
    x_before = state.antennas[0].pose.x
    for _ in range(50):
        state = step_world(state, StepInput(left=0.3, right=0.3), params, chain)
    assert state.antennas[0].pose.x == x_before


# ---------------------------------------------------------------------------
# derive_dynamic_friction
# ---------------------------------------------------------------------------


def test_derive_mu_lossless_run():
    assert derive_dynamic_friction(1.0, 1.0, 1.0, -9.81) == 0.0


def test_derive_mu_formula():
    # (1.0 - 0.8/1.0) / 9.81
    assert derive_dynamic_friction(0.8, 1.0, 1.0, -9.81) == pytest.approx(0.2 / 9.81, abs=1e-12)


def test_derive_mu_rejects_inconsistent():
    with pytest.raises(ValueError):
        derive_dynamic_friction(1.2, 1.0, 1.0, -9.81)
    with pytest.raises(ValueError):
        derive_dynamic_friction(0.8, 0.0, 1.0, -9.81)

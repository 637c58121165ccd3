import math

import pytest

from rovertwin.bus import Envelope
from rovertwin.core import load_config
from rovertwin.emulator import PerturbationProfile
from rovertwin.fidelity import (
    calibrate,
    fidelity_report,
    golden_section,
    metric_driving_error,
    metric_joint_error,
    metric_joint_resolution,
    metric_latency,
    path_length,
    resolution_from_schedule,
)
from rovertwin.routines import standard_calibration_routine
from rovertwin.simloop import SessionRun, Simulator, TimedCommand
from tests.conftest import read_config_text

SEC = 1_000_000_000
MS = 1_000_000
Q_RAD = math.radians(0.0888)


def quick_routine(cfg, fine_hold_s=2.0):
    return standard_calibration_routine(cfg, fine_steps=5, fine_hold_s=fine_hold_s, coarse_hold_s=1.0)


def _run_with_delays(cmd_delays_ms, tel_delays_ms) -> SessionRun:
    def env(topic, delay, seq):
        return Envelope(
            topic=topic, seq=seq, sent_at_ns=0, payload={}, delivered_at_ns=int(delay * MS)
        )

    return SessionRun(
        telemetry=[env("odometry", d, i + 1) for i, d in enumerate(tel_delays_ms)],
        commands=[env("drive_cmd", d, i + 1) for i, d in enumerate(cmd_delays_ms)],
        events=[],
        final_state=None,
        sim_id="x",
        seed=0,
    )


# ---------------------------------------------------------------------------
# latency metric
# ---------------------------------------------------------------------------


def test_latency_identical_logs():
    a = _run_with_delays([20, 20, 20], [30, 30])
    b = _run_with_delays([20, 20, 20], [30, 30])
    delta = metric_latency(a, b)
    assert delta.command_ms == 0.0
    assert delta.telemetry_ms == 0.0


def test_latency_median_subtraction():
    phys = _run_with_delays([150, 150, 150], [150])
    digital = _run_with_delays([30, 30, 30], [30])
    delta = metric_latency(phys, digital)
    assert delta.command_ms == 120.0
    assert delta.injected_command_ms == 120.0


def test_latency_negative_reported_but_not_injected():
    phys = _run_with_delays([30], [30])
    digital = _run_with_delays([150], [150])
    delta = metric_latency(phys, digital)
    assert delta.command_ms == -120.0
    assert delta.injected_command_ms == 0.0


# ---------------------------------------------------------------------------
# joint error metric
# ---------------------------------------------------------------------------


def arm_cmd(t_s, targets):
    return TimedCommand(int(t_s * SEC), "arm_cmd", {"targets": targets})


def test_joint_error_zero_when_tracking(default_config):
    cmds = [arm_cmd(0.5, [10 * Q_RAD, 0, 0, 0, 0, 0]), arm_cmd(2.0, [0, 20 * Q_RAD, 0, 0, 0, 0])]
    run = Simulator(default_config, seed=1).run_script(cmds, duration_s=4.0)
    errors = metric_joint_error(run, cmds)
    assert all(e == 0.0 for e in errors)


def test_joint_error_sees_constant_bias(default_config):
    profile = PerturbationProfile(joint_noise_sigma=1e-12)  # engage the bias+noise path
    profile.joint_bias[2] = math.radians(0.5)
    cmds = [arm_cmd(0.5, [0, 0, 10 * Q_RAD, 0, 0, 0])]
    run = Simulator(default_config, profile=profile, seed=2, sim_id="emulator").run_script(
        cmds, duration_s=3.0
    )
    errors = metric_joint_error(run, cmds)
    assert errors[2] == pytest.approx(math.radians(0.5), abs=1e-9)
    assert errors[0] == pytest.approx(0.0, abs=1e-9)


def test_joint_error_folded_normal_mean(default_config):
    # zero-mean noise sigma: mean |error| converges to sigma * sqrt(2/pi)
    sigma = math.radians(0.2)
    profile = PerturbationProfile(joint_noise_sigma=sigma)
    run = Simulator(default_config, profile=profile, seed=3, sim_id="emulator").run_script(
        [], duration_s=101.0
    )
    errors = metric_joint_error(run, [])
    expected = sigma * math.sqrt(2.0 / math.pi)
    n = 6 * 101 * 100  # pooled samples across joints
    assert n > 10_000
    pooled = sum(errors) / len(errors)
    assert pooled == pytest.approx(expected, rel=0.02)


def test_joint_error_requires_settled_overlap(default_config):
    run = Simulator(default_config, seed=1).run_script([], duration_s=0.2)  # shorter than settle
    with pytest.raises(ValueError):
        metric_joint_error(run, [])


# ---------------------------------------------------------------------------
# resolution metric
# ---------------------------------------------------------------------------


def staircase_series(levels, ticks_per_level=50):
    series = []
    t = 0
    for lvl in levels:
        for _ in range(ticks_per_level):
            series.append((t, lvl))
            t += 10 * MS
    return series


def test_resolution_exact_staircase():
    levels = [k * Q_RAD for k in range(8)]
    est = metric_joint_resolution(staircase_series(levels))
    assert est.step_rad == Q_RAD
    assert not est.effectively_continuous


def test_resolution_double_steps_report_observed_quantum():
    levels = [k * (2 * Q_RAD) for k in range(6)]
    est = metric_joint_resolution(staircase_series(levels))
    assert est.step_rad == pytest.approx(2 * Q_RAD, abs=1e-15)


def test_resolution_continuous_trajectory_flagged():
    import random

    rng = random.Random(9)
    levels = [rng.uniform(0, 0.05) for _ in range(30)]
    est = metric_joint_resolution(staircase_series(levels))
    assert est.step_rad < math.radians(1e-3)
    assert est.effectively_continuous


def test_resolution_needs_two_levels():
    with pytest.raises(ValueError):
        metric_joint_resolution(staircase_series([0.5]))


def test_resolution_from_schedule_exact_under_noise(default_config):
    profile = PerturbationProfile(
        joint_noise_sigma=math.radians(0.2),
        quant_step_override=2 * Q_RAD,
    )
    routine = standard_calibration_routine(default_config, fine_steps=8, fine_hold_s=9.0, coarse_hold_s=1.0)
    run = Simulator(default_config, profile=profile, seed=4, sim_id="emulator").run_script(
        routine.commands, duration_s=routine.duration_s
    )
    fine = [w for w in routine.levels if w.joint == routine.fine_joint and w.fine]
    est = resolution_from_schedule(run, fine, routine.command_step, routine.settle_ns)
    assert est.step_rad == 2 * Q_RAD  # exact: integer gcd times the command grid


# ---------------------------------------------------------------------------
# driving metric
# ---------------------------------------------------------------------------


def drive_script(v, t_end_s):
    return [
        TimedCommand(0, "drive_cmd", {"v_left": v, "v_right": v}),
        TimedCommand(int(t_end_s * SEC), "drive_cmd", {"v_left": 0.0, "v_right": 0.0}),
    ]


def test_driving_error_identical_dynamics(default_config):
    a = Simulator(default_config, seed=5).run_script(drive_script(0.5, 3.0), duration_s=5.0)
    b = Simulator(default_config, seed=6).run_script(drive_script(0.5, 3.0), duration_s=5.0)
    err = metric_driving_error(a, b)
    assert err.error_m == 0.0
    assert err.error_pct == 0.0


def test_driving_error_torque_scale_shortens_path(default_config):
    routine = quick_routine(default_config)
    twin = Simulator(default_config, seed=7).run_script(
        routine.drive_commands_rel, duration_s=routine.drive_duration_s
    )
    worn = Simulator(
        default_config, profile=PerturbationProfile(torque_scale=0.8), seed=7, sim_id="emulator"
    ).run_script(routine.drive_commands_rel, duration_s=routine.drive_duration_s)
    err = metric_driving_error(twin, worn)
    assert err.distance_digital_m < err.distance_physical_m
    assert err.error_m > 0.02


def test_driving_error_matches_constant_decel_closed_form():
    # high torque cap so speed-step commands slip: ramp rate is mu_d * |g|;
    # run ends mid-cruise so only the start ramps differ between the two
    cfg_text = """
physics: {gravity: -9.81, mu_static: 0.6, mu_dynamic: 0.45, wheel_torque_max: 6.0,
          rover_mass: 10.0, wheel_radius: 0.0762 m, wheel_base: 0.39 m}
scenario: {id: x, antennas: []}
"""
    cfg = load_config(cfg_text)
    v = 0.5
    script = [TimedCommand(0, "drive_cmd", {"v_left": v, "v_right": v})]
    twin = Simulator(cfg, seed=8).run_script(script, duration_s=4.0)
    emu = Simulator(
        cfg, profile=PerturbationProfile(mu_dynamic_override=0.55), seed=8, sim_id="emulator"
    ).run_script(script, duration_s=4.0)
    err = metric_driving_error(twin, emu)
    a_twin = 0.45 * 9.81
    a_emu = 0.55 * 9.81
    closed_form = (v**2 / 2.0) * (1.0 / a_twin - 1.0 / a_emu)
    assert err.error_m == pytest.approx(closed_form, abs=2e-3)


# ---------------------------------------------------------------------------
# golden section
# ---------------------------------------------------------------------------


def test_golden_section_quadratic():
    x, fx, converged = golden_section(lambda x: (x - 0.37) ** 2, 0.0, 1.0, tol=1e-6)
    assert converged
    assert x == pytest.approx(0.37, abs=1e-5)


def test_golden_section_matches_grid_on_v_shape():
    f = lambda x: abs(x - 0.618)
    (x, _, _) = golden_section(f, 0.0, 1.0, tol=1e-5)
    grid = [k / 199 for k in range(200)]
    x_grid = min(grid, key=f)
    assert abs(x - x_grid) <= 1.0 / 199


# ---------------------------------------------------------------------------
# calibration
# ---------------------------------------------------------------------------


def test_calibrate_identity_profile(default_config):
    routine = quick_routine(default_config)
    phys = Simulator(default_config, profile=PerturbationProfile(), seed=11, sim_id="emulator").run_script(
        routine.commands, duration_s=routine.duration_s
    )
    result = calibrate(phys, default_config, routine, seed=11)
    assert result.injected_latency_command_ms == 0.0
    assert result.injected_latency_telemetry_ms == 0.0
    assert all(abs(b) < 1e-12 for b in result.joint_bias_fit)
    assert result.joint_noise_fit == pytest.approx(0.0, abs=1e-12)
    assert result.quant_step_fit == default_config.physics.joint_step
    assert result.torque_scale_fit == pytest.approx(1.0, abs=0.01)
    assert result.residuals.driving.error_pct <= 0.5
    assert result.within_tolerance


def test_calibrate_monotone_improvement(default_config):
    routine = quick_routine(default_config, fine_hold_s=4.0)
    profile = PerturbationProfile(joint_noise_sigma=math.radians(0.1), torque_scale=0.7)
    profile.joint_bias[1] = math.radians(0.3)
    profile.extra_latency.base_delay_ms = 60.0
    phys = Simulator(default_config, profile=profile, seed=12, sim_id="emulator").run_script(
        routine.commands, duration_s=routine.duration_s
    )
    result = calibrate(phys, default_config, routine, seed=12)
    pre, post = result.pre, result.residuals
    assert post.latency_command_delta_ms <= pre.latency_command_delta_ms
    assert post.joint_error_delta_max <= pre.joint_error_delta_max
    assert post.driving.error_m <= pre.driving.error_m
    assert post.resolution_delta <= pre.resolution_delta


def test_metrics_insensitive_to_record_order(default_config):
    routine = quick_routine(default_config)
    run = Simulator(default_config, seed=13).run_script(routine.commands, duration_s=routine.duration_s)
    shuffled = SessionRun(
        telemetry=list(reversed(run.telemetry)),
        commands=run.commands,
        events=run.events,
        final_state=run.final_state,
        sim_id=run.sim_id,
        seed=run.seed,
    )
    assert path_length(run) == path_length(shuffled)
    assert metric_joint_error(run, routine.commands) == metric_joint_error(shuffled, routine.commands)


def test_fidelity_report_document_shape(default_config):
    routine = quick_routine(default_config)
    phys = Simulator(default_config, profile=PerturbationProfile(), seed=14, sim_id="emulator").run_script(
        routine.commands, duration_s=routine.duration_s
    )
    twin = Simulator(default_config, seed=14).run_script(routine.commands, duration_s=routine.duration_s)
    report = fidelity_report(phys, twin, routine)
    doc = report.to_document()
    assert set(doc) == {"latency_delta_ms", "joint_abs_error_rad", "joint_resolution_rad", "driving_distance"}
    assert doc["driving_distance"]["error_m"] == 0.0
    assert report.joint_resolution_physical > 0

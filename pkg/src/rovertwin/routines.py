"""Shipped command scripts: the standard calibration routine and a scenario solution.

The calibration routine has three phases:

* a latency ping burst (no-op gimbal commands at 20 Hz);
* an arm staircase: a coarse sweep across each joint's range for bias/noise
  statistics, then a fine staircase on one joint in single actuator steps with
  long holds, which is what makes the quantum recoverable under reporting
  noise;
* a driving course of repeated accelerate/brake cycles plus an arc, whose
  total path length is the objective for the torque-scale fit.

All commanded arm targets sit on the actuator step grid, so quantization
contributes nothing to the joint-error statistics.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .core import TICK_NS, TwinConfig, normalize_angle
from .kinematics import gripper_world_planar, quantize_joint
from .simloop import Simulator, TimedCommand

SEC = 1_000_000_000


# ---------------------------------------------------------------------------
# script files (JSONL: {"t": seconds, "topic": ..., "payload": {...}})
# ---------------------------------------------------------------------------


def write_script(path: str, commands: list[TimedCommand]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for cmd in sorted(commands, key=lambda c: c.t_ns):
            f.write(json.dumps({"t_ns": cmd.t_ns, "topic": cmd.topic, "payload": cmd.payload}) + "\n")


def load_script(path: str) -> list[TimedCommand]:
    commands = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            rec = json.loads(line)
            if "t_ns" in rec:
                t_ns = int(rec["t_ns"])
            elif "t" in rec:
                t_ns = int(round(float(rec["t"]) * SEC))
            else:
                raise ValueError(f"script line {line_no}: missing 't' or 't_ns'")
            commands.append(TimedCommand(t_ns=t_ns, topic=rec["topic"], payload=rec["payload"]))
    return commands


# ---------------------------------------------------------------------------
# standard calibration routine
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LevelWindow:
    """One commanded arm hold: joint, command send time, end of hold, target."""

    joint: int
    t_start_ns: int
    t_end_ns: int
    commanded: float
    fine: bool = False


@dataclass
class CalibrationRoutine:
    commands: list[TimedCommand]
    levels: list[LevelWindow]
    fine_joint: int
    command_step: float
    drive_window_ns: tuple[int, int]
    drive_commands_rel: list[TimedCommand]
    drive_duration_s: float
    duration_s: float
    settle_ns: int = 500_000_000


def _drive_phase() -> tuple[list[TimedCommand], float]:
    """Full-speed reversals plus an arc, relative to t=0.

    Symmetric accelerate/cruise/brake cycles have a path length independent of
    the ramp rate (ramp losses cancel), so the course uses sign reversals:
    each +v to -v crossing shortens the path by about v^2/a, which ties the
    measured distance to the torque-limited acceleration.
    """
    cmds: list[TimedCommand] = []
    t = 0.2
    v = 0.7
    for k in range(4):
        sign = 1.0 if k % 2 == 0 else -1.0
        cmds.append(TimedCommand(int(t * SEC), "drive_cmd", {"v_left": sign * v, "v_right": sign * v}))
        t += 2.0
    cmds.append(TimedCommand(int(t * SEC), "drive_cmd", {"v_left": 0.0, "v_right": 0.0}))
    t += 1.0
    cmds.append(TimedCommand(int(t * SEC), "drive_cmd", {"v_left": 0.3, "v_right": 0.55}))
    t += 3.0
    cmds.append(TimedCommand(int(t * SEC), "drive_cmd", {"v_left": 0.0, "v_right": 0.0}))
    t += 1.5
    return cmds, t


def standard_calibration_routine(
    config: TwinConfig,
    fine_joint: int = 0,
    fine_steps: int = 12,
    fine_hold_s: float = 9.0,
    coarse_hold_s: float = 1.5,
) -> CalibrationRoutine:
    step = config.physics.joint_step
    commands: list[TimedCommand] = []
    levels: list[LevelWindow] = []

    # phase A: latency pings (100 no-op gimbal commands at 20 Hz)
    for k in range(100):
        commands.append(TimedCommand(int(k * 0.05 * SEC), "gimbal_cmd", {"pan": 0.0, "tilt": 0.0}))

    # phase B: arm staircase
    t = 6.0
    current = [0.0] * 6

    def hold(joint: int, value: float, duration: float, fine: bool) -> None:
        nonlocal t
        current[joint] = value
        start = int(t * SEC)
        commands.append(TimedCommand(start, "arm_cmd", {"targets": list(current)}))
        t += duration
        levels.append(LevelWindow(joint, start, int(t * SEC), value, fine))

    for j in range(6):
        lo = config.chain.links[j].joint_min
        hi = config.chain.links[j].joint_max
        for frac, limit in ((-0.5, lo), (-0.25, lo), (0.25, hi), (0.5, hi)):
            target = quantize_joint(abs(frac) * limit, step)  # grid-aligned level
            hold(j, target, coarse_hold_s, fine=False)
        hold(j, 0.0, coarse_hold_s, fine=False)

    # fine staircase: single-quantum steps with long holds so per-level means
    # beat the reporting noise
    for k in range(1, fine_steps + 1):
        hold(fine_joint, k * step, fine_hold_s, fine=True)
    hold(fine_joint, 0.0, fine_hold_s, fine=True)

    # phase C: driving course
    t += 1.0
    drive_rel, drive_duration = _drive_phase()
    drive_start = int(t * SEC)
    for cmd in drive_rel:
        commands.append(TimedCommand(drive_start + cmd.t_ns, cmd.topic, cmd.payload))
    t += drive_duration + 1.0

    return CalibrationRoutine(
        commands=commands,
        levels=levels,
        fine_joint=fine_joint,
        command_step=step,
        drive_window_ns=(drive_start, int(t * SEC)),
        drive_commands_rel=drive_rel,
        drive_duration_s=drive_duration + 1.0,
        duration_s=t,
    )


# ---------------------------------------------------------------------------
# scripted single-antenna solution
# ---------------------------------------------------------------------------


def antenna_solution(
    config: TwinConfig,
    approach_speed: float = 0.2,
    extra_resets: int = 0,
) -> list[TimedCommand]:
    """Author a command script that solves the single-antenna scenario.

    The approach stop time is found by probing the simulator itself: drive
    toward the antenna at low speed, record when the gripper comes within
    grasp range, and schedule the stop command so it is applied in time. Then
    grasp, rotate the base joint by the required dipole correction, release.

    ``extra_resets`` prepends that many world resets (each after a short
    drive) for exercising reset accounting.
    """
    scen = config.scenario
    if not scen.antennas:
        raise ValueError("scenario has no antennas to solve")
    ant = scen.antennas[0]
    cmd_latency_ns = int(config.bus.command.base_delay_ms * 1e6)

    # probe: when does the gripper enter grasp range at constant speed?
    probe = Simulator(config, seed=0, sim_id="probe")
    probe.load_script([TimedCommand(0, "drive_cmd", {"v_left": approach_speed, "v_right": approach_speed})])
    reach_t_ns = None
    for _ in range(60 * 100):
        probe.tick()
        gx, gy, _ = gripper_world_planar(config.chain, probe.state.arm, probe.state.rover)
        if math.hypot(ant.pose.x - gx, ant.pose.y - gy) <= 0.02:
            reach_t_ns = probe.state.sim_time
            break
    if reach_t_ns is None:
        raise ValueError("antenna is out of reach on a straight-line approach")

    t0 = 0.0
    script: list[TimedCommand] = []
    for k in range(extra_resets):
        script.append(TimedCommand(int(t0 * SEC), "drive_cmd", {"v_left": 0.2, "v_right": 0.2}))
        script.append(TimedCommand(int((t0 + 0.5) * SEC), "reset_cmd", {}))
        t0 += 1.0

    base_ns = int(t0 * SEC)
    script.append(TimedCommand(base_ns, "drive_cmd", {"v_left": approach_speed, "v_right": approach_speed}))
    stop_ns = base_ns + max(0, reach_t_ns - cmd_latency_ns)
    script.append(TimedCommand(stop_ns, "drive_cmd", {"v_left": 0.0, "v_right": 0.0}))

    t_grasp = stop_ns + int(0.5 * SEC)
    script.append(TimedCommand(t_grasp, "arm_cmd", {"gripper": 0.0}))

    # shortest dipole correction, mapped into (-pi/2, pi/2]
    delta = math.fmod(ant.target_orientation - ant.orientation, math.pi)
    if delta <= -math.pi / 2:
        delta += math.pi
    elif delta > math.pi / 2:
        delta -= math.pi
    turn = normalize_angle(delta)
    t_turn = t_grasp + int(0.5 * SEC)
    script.append(TimedCommand(t_turn, "arm_cmd", {"targets": [turn, 0, 0, 0, 0, 0], "gripper": 0.0}))

    t_release = t_turn + int(0.5 * SEC)
    script.append(TimedCommand(t_release, "arm_cmd", {"gripper": 1.0}))
    return script

"""Fixed-timestep world stepping: traction, Coulomb friction, antenna transport.

Longitudinal model, applied independently per wheel side with half the rover
mass on each contact:

* velocity commands produce the force required to reach the target speed in
  one tick, capped by the wheel torque limit;
* a contact grips while the capped force stays within mu_static * N and then
  tracks exactly; beyond that it slips and transmits mu_dynamic * N;
* torque commands below the static threshold leave a resting rover exactly
  still (breakaway requires exceeding mu_static * N).

Stiction re-engages below a relative contact speed of REL_SPEED_EPS, and a
slipping contact that crosses its target speed within a tick sticks at the
target; this is what makes the constant-deceleration stop test land within a
single timestep of the closed form v / (mu_d * |g|).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import ConfigError, PhysicsParams, TICK_NS, TICK_SECONDS, TwinState, normalize_angle
from .kinematics import KinematicChain, gripper_world_planar, step_diff_drive

REL_SPEED_EPS = 1e-4  # m/s; below this the contact is treated as rolling without slip
GRASP_RADIUS = 0.05  # m; gripper-to-antenna planar distance at which a closed gripper grabs
GRIPPER_CLOSED = 0.5  # aperture fraction below which the gripper counts as closed

VELOCITY = "velocity"
TORQUE = "torque"


@dataclass(frozen=True)
class SurfaceModel:
    """Coulomb friction pair for the floor contact."""

    mu_static: float
    mu_dynamic: float

    def validate(self) -> None:
        if not (self.mu_static >= self.mu_dynamic >= 0.0):
            raise ConfigError("surface", f"need mu_static >= mu_dynamic >= 0, got {self}")


@dataclass(frozen=True)
class StepInput:
    """One tick of drive input.

    ``mode`` selects whether ``left``/``right`` are wheel contact speed targets
    (m/s) or wheel torques (N*m). ``dt`` must equal the fixed timestep.
    """

    left: float = 0.0
    right: float = 0.0
    mode: str = VELOCITY
    dt: float = TICK_SECONDS

    def validate(self) -> None:
        if self.mode not in (VELOCITY, TORQUE):
            raise ValueError(f"unknown drive mode {self.mode!r}")
        if abs(self.dt - TICK_SECONDS) > 1e-15:
            raise ValueError(f"dt must equal the fixed timestep {TICK_SECONDS}, got {self.dt}")
        for name in ("left", "right"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"drive.{name} must be finite")


def traction_check(applied_force: float, mass: float, gravity: float, mu_static: float) -> bool:
    """True iff the applied force can break static friction: |F| > mu_s * m * |g|."""
    if mass <= 0.0:
        raise ValueError(f"mass must be > 0, got {mass}")
    return abs(applied_force) > mu_static * mass * abs(gravity)


def _side_step_velocity(
    v: float, target: float, dt: float, m_side: float, g_mag: float,
    mu_s: float, mu_d: float, f_cap: float,
) -> float:
    """Advance one wheel contact speed toward its target. Returns the new speed."""
    gap = target - v
    if abs(gap) < REL_SPEED_EPS:
        return target
    normal = m_side * g_mag
    f_req = m_side * gap / dt
    f_mag = min(abs(f_req), f_cap)
    if f_mag > mu_s * normal:
        # traction broken: the contact slides and transmits kinetic friction
        v2 = v + math.copysign(mu_d * g_mag, gap) * dt
        if (target - v2) * gap <= 0.0:
            return target  # crossed the target within the tick: restick
        return v2
    if abs(f_req) <= f_cap:
        return target  # full tracking: grip force reaches the target exactly
    return v + math.copysign(f_cap, gap) / m_side * dt  # torque-limited ramp


def _side_step_torque(
    v: float, torque: float, wheel_radius: float, dt: float, m_side: float,
    g_mag: float, mu_s: float, mu_d: float, f_cap: float,
) -> float:
    """Advance one wheel contact speed under a torque command."""
    f = torque / wheel_radius
    f = math.copysign(min(abs(f), f_cap), f) if f != 0.0 else 0.0
    if f == 0.0:
        return v
    normal = m_side * g_mag
    if v == 0.0 and abs(f) <= mu_s * normal:
        return 0.0  # static friction holds: zero displacement, exactly
    if abs(f) > mu_s * normal:
        return v + math.copysign(mu_d * g_mag, f) * dt  # slipping contact
    return v + f / m_side * dt


def _transport_grasped(state: TwinState, chain: KinematicChain) -> None:
    """Move grasped antennas rigidly with the gripper's planar frame."""
    gx, gy, gyaw = gripper_world_planar(chain, state.arm, state.rover)
    cy, sy = math.cos(gyaw), math.sin(gyaw)
    for ant in state.antennas:
        if ant.grasped_by is None or ant.grasp_offset is None:
            continue
        dx, dy, dheading, dorient = ant.grasp_offset
        ant.pose.x = gx + cy * dx - sy * dy
        ant.pose.y = gy + sy * dx + cy * dy
        ant.pose.heading = normalize_angle(gyaw + dheading)
        ant.orientation = normalize_angle(gyaw + dorient)


def update_grasp_state(state: TwinState, chain: KinematicChain, rover_id: str = "rover") -> list[tuple[str, str]]:
    """Engage or release antenna grasps based on gripper aperture and proximity.

    Grasping is kinematic: when the gripper closes within GRASP_RADIUS of a
    free antenna, the antenna's planar pose is captured relative to the
    gripper frame and transported rigidly until release. Returns a list of
    ("grasped"|"released", antenna_id) transitions for the event log.
    """
    events: list[tuple[str, str]] = []
    closed = state.arm.gripper < GRIPPER_CLOSED
    gx, gy, gyaw = gripper_world_planar(chain, state.arm, state.rover)
    cy, sy = math.cos(gyaw), math.sin(gyaw)
    for ant in state.antennas:
        if ant.grasped_by is None and closed:
            if math.hypot(ant.pose.x - gx, ant.pose.y - gy) <= GRASP_RADIUS:
                # capture pose relative to the gripper planar frame
                rx, ry = ant.pose.x - gx, ant.pose.y - gy
                ant.grasp_offset = (
                    cy * rx + sy * ry,
                    -sy * rx + cy * ry,
                    normalize_angle(ant.pose.heading - gyaw),
                    normalize_angle(ant.orientation - gyaw),
                )
                ant.grasped_by = rover_id
                events.append(("grasped", ant.id))
        elif ant.grasped_by is not None and not closed:
            ant.grasped_by = None
            ant.grasp_offset = None
            events.append(("released", ant.id))
    return events


def step_world(
    state: TwinState,
    drive: StepInput,
    params: PhysicsParams,
    chain: KinematicChain | None = None,
) -> TwinState:
    """Advance the world by one fixed tick. Pure: returns a new state.

    Wheel contact speeds ramp toward their commands under torque and traction
    limits, the pose advances along the exact diff-drive arc, grasped antennas
    ride the gripper, and sim_time increases by one tick.
    """
    drive.validate()
    new = state.copy()
    g_mag = abs(params.gravity)
    m_side = 0.5 * params.rover_mass
    f_cap = params.wheel_torque_max / params.wheel_radius
    r = params.wheel_radius

    v_l = state.omega_left * r
    v_r = state.omega_right * r
    if drive.mode == VELOCITY:
        v_l2 = _side_step_velocity(v_l, drive.left, drive.dt, m_side, g_mag, params.mu_static, params.mu_dynamic, f_cap)
        v_r2 = _side_step_velocity(v_r, drive.right, drive.dt, m_side, g_mag, params.mu_static, params.mu_dynamic, f_cap)
    else:
        v_l2 = _side_step_torque(v_l, drive.left, r, drive.dt, m_side, g_mag, params.mu_static, params.mu_dynamic, f_cap)
        v_r2 = _side_step_torque(v_r, drive.right, r, drive.dt, m_side, g_mag, params.mu_static, params.mu_dynamic, f_cap)

    new.omega_left = v_l2 / r
    new.omega_right = v_r2 / r
    if v_l2 != 0.0 or v_r2 != 0.0:
        new.rover = step_diff_drive(new.rover, v_l2, v_r2, params.wheel_base, drive.dt)
    if chain is not None and any(a.grasped_by is not None for a in new.antennas):
        _transport_grasped(new, chain)
    new.sim_time = state.sim_time + TICK_NS
    return new


def derive_dynamic_friction(
    v_final: float, duration: float, commanded_accel: float, gravity: float
) -> float:
    """Back out mu_dynamic from a rest-to-known-velocity drive test.

    The measured velocity deficit over the run is attributed to kinetic
    friction: mu_d = (commanded_accel - v_final/duration) / |gravity|.
    """
    if duration <= 0.0:
        raise ValueError(f"duration must be > 0, got {duration}")
    mu = (commanded_accel - v_final / duration) / abs(gravity)
    if mu < 0.0:
        raise ValueError(
            f"inconsistent measurement: v_final/duration = {v_final / duration} "
            f"exceeds commanded acceleration {commanded_accel}"
        )
    return mu

"""Shared domain types, world snapshotting, and configuration loading.

All angles are stored in radians and all times in integer nanoseconds of
simulated time. Degree/millisecond values are converted once, at the
configuration boundary (see :func:`parse_quantity`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any

import yaml

# Fixed simulation timestep: 10 ms. All published tolerances assume this value.
TICK_NS = 10_000_000
TICK_SECONDS = TICK_NS / 1e9

# Default joint resolution of the arm: the smallest commanded step the
# physical actuator can execute.
DEFAULT_JOINT_STEP_RAD = math.radians(0.0888)

GIMBAL_LIMIT_RAD = math.pi / 2  # 180 degrees of travel per axis

ARM_DOF = 6


class ConfigError(ValueError):
    """Raised when a configuration document is malformed or violates an invariant.

    ``field`` names the offending entry using dotted-path notation
    (e.g. ``physics.mu_static``).
    """

    def __init__(self, field_path: str, message: str):
        self.field = field_path
        super().__init__(f"{field_path}: {message}")


def normalize_angle(a: float) -> float:
    """Map any finite angle into (-pi, pi]. Idempotent."""
    if not math.isfinite(a):
        raise ValueError(f"angle must be finite, got {a!r}")
    a = math.fmod(a, 2.0 * math.pi)
    if a <= -math.pi:
        a += 2.0 * math.pi
    elif a > math.pi:
        a -= 2.0 * math.pi
    return a


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass
class Pose2D:
    """Planar pose of the rover body: position in meters, heading in radians."""

    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0

    def validate(self, where: str = "pose") -> None:
        for name in ("x", "y", "heading"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ConfigError(f"{where}.{name}", f"must be finite, got {v!r}")
        if not (-math.pi < self.heading <= math.pi):
            raise ConfigError(f"{where}.heading", "must be normalized to (-pi, pi]")


@dataclass
class JointVector:
    """Arm configuration: six revolute joint angles plus gripper aperture.

    ``gripper`` is an aperture fraction in [0, 1]; 0 is fully closed.
    """

    angles: list[float] = field(default_factory=lambda: [0.0] * ARM_DOF)
    gripper: float = 1.0

    def validate(self, where: str = "arm") -> None:
        if len(self.angles) != ARM_DOF:
            raise ConfigError(
                f"{where}.angles", f"exactly {ARM_DOF} joint angles required, got {len(self.angles)}"
            )
        for i, a in enumerate(self.angles):
            if not math.isfinite(a):
                raise ConfigError(f"{where}.angles[{i}]", "must be finite")
        if not (0.0 <= self.gripper <= 1.0):
            raise ConfigError(f"{where}.gripper", f"aperture must lie in [0, 1], got {self.gripper}")

    def copy(self) -> "JointVector":
        return JointVector(angles=list(self.angles), gripper=self.gripper)


@dataclass
class GimbalState:
    """Pan/tilt of the stereo-camera mast, radians, each limited to +-90 degrees."""

    pan: float = 0.0
    tilt: float = 0.0

    def validate(self, where: str = "gimbal") -> None:
        for name in ("pan", "tilt"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ConfigError(f"{where}.{name}", "must be finite")
            if abs(v) > GIMBAL_LIMIT_RAD + 1e-12:
                raise ConfigError(f"{where}.{name}", "exceeds +-90 degree servo travel")


@dataclass
class PhysicsParams:
    """World and rover physical parameters.

    ``gravity`` is signed (negative, pointing down); friction coefficients are
    Coulomb coefficients for the wheel/floor contact. ``joint_step`` is the arm
    command quantum in radians.
    """

    gravity: float = -9.81
    mu_static: float = 0.6
    mu_dynamic: float = 0.45
    wheel_torque_max: float = 1.4
    joint_step: float = DEFAULT_JOINT_STEP_RAD
    rover_mass: float = 10.0
    wheel_radius: float = 0.0762
    wheel_base: float = 0.39

    def validate(self, where: str = "physics") -> None:
        if not (self.gravity < 0.0):
            raise ConfigError(f"{where}.gravity", f"must be negative (downward), got {self.gravity}")
        if self.mu_dynamic < 0.0:
            raise ConfigError(f"{where}.mu_dynamic", "must be >= 0")
        if self.mu_static < self.mu_dynamic:
            raise ConfigError(
                f"{where}.mu_static",
                f"mu_static ({self.mu_static}) must be >= mu_dynamic ({self.mu_dynamic})",
            )
        if not (self.joint_step > 0.0):
            raise ConfigError(f"{where}.joint_step", "must be > 0")
        for name in ("wheel_torque_max", "rover_mass", "wheel_radius", "wheel_base"):
            v = getattr(self, name)
            if not (v > 0.0 and math.isfinite(v)):
                raise ConfigError(f"{where}.{name}", f"must be finite and > 0, got {v!r}")


@dataclass
class AntennaNode:
    """A dipole antenna the rover can grasp and reorient.

    ``orientation`` is the current dipole-axis yaw; alignment is judged against
    ``target_orientation`` modulo pi (a dipole is symmetric under a half-turn).
    ``grasp_offset`` holds the planar transform from the gripper frame captured
    at grasp time; None while free.
    """

    id: str
    pose: Pose2D
    orientation: float
    target_orientation: float
    tolerance: float
    grasped_by: str | None = None
    grasp_offset: tuple[float, float, float, float] | None = None

    def validate(self, where: str = "antenna") -> None:
        if not self.id:
            raise ConfigError(f"{where}.id", "must be non-empty")
        self.pose.validate(f"{where}.pose")
        if not (self.tolerance > 0.0):
            raise ConfigError(f"{where}.tolerance", "must be > 0")
        if not (-math.pi < self.orientation <= math.pi):
            raise ConfigError(f"{where}.orientation", "must be normalized to (-pi, pi]")

    def copy(self) -> "AntennaNode":
        return AntennaNode(
            id=self.id,
            pose=replace(self.pose),
            orientation=self.orientation,
            target_orientation=self.target_orientation,
            tolerance=self.tolerance,
            grasped_by=self.grasped_by,
            grasp_offset=self.grasp_offset,
        )


@dataclass
class TwinState:
    """Full simulation snapshot: rover pose, wheel speeds, arm, gimbal, antennas, clock.

    ``omega_left``/``omega_right`` are wheel angular velocities in rad/s;
    ``sim_time`` is integer nanoseconds and never decreases, including across
    world resets.
    """

    rover: Pose2D = field(default_factory=Pose2D)
    omega_left: float = 0.0
    omega_right: float = 0.0
    arm: JointVector = field(default_factory=JointVector)
    gimbal: GimbalState = field(default_factory=GimbalState)
    antennas: list[AntennaNode] = field(default_factory=list)
    sim_time: int = 0
    reset_count: int = 0

    def copy(self) -> "TwinState":
        return TwinState(
            rover=replace(self.rover),
            omega_left=self.omega_left,
            omega_right=self.omega_right,
            arm=self.arm.copy(),
            gimbal=replace(self.gimbal),
            antennas=[a.copy() for a in self.antennas],
            sim_time=self.sim_time,
            reset_count=self.reset_count,
        )


# ---------------------------------------------------------------------------
# Snapshot / reset
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WorldSnapshot:
    """Immutable, serializable copy of a TwinState.

    The document form is the same YAML structure used by scenario files, so a
    live capture can be saved and re-used as a scenario starting state.
    """

    rover: tuple[float, float, float]
    omega_left: float
    omega_right: float
    arm_angles: tuple[float, ...]
    gripper: float
    gimbal: tuple[float, float]
    antennas: tuple[tuple, ...]
    sim_time: int
    reset_count: int

    def to_document(self) -> dict:
        return {
            "rover": {"x": self.rover[0], "y": self.rover[1], "heading": self.rover[2]},
            "omega_left": self.omega_left,
            "omega_right": self.omega_right,
            "arm": {"angles": list(self.arm_angles), "gripper": self.gripper},
            "gimbal": {"pan": self.gimbal[0], "tilt": self.gimbal[1]},
            "antennas": [
                {
                    "id": a[0],
                    "x": a[1],
                    "y": a[2],
                    "heading": a[3],
                    "orientation": a[4],
                    "target_orientation": a[5],
                    "tolerance": a[6],
                    "grasped_by": a[7],
                    "grasp_offset": list(a[8]) if a[8] is not None else None,
                }
                for a in self.antennas
            ],
            "sim_time": self.sim_time,
            "reset_count": self.reset_count,
        }

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_document(), sort_keys=True)

    @staticmethod
    def from_document(doc: dict) -> "WorldSnapshot":
        return WorldSnapshot(
            rover=(doc["rover"]["x"], doc["rover"]["y"], doc["rover"]["heading"]),
            omega_left=doc["omega_left"],
            omega_right=doc["omega_right"],
            arm_angles=tuple(doc["arm"]["angles"]),
            gripper=doc["arm"]["gripper"],
            gimbal=(doc["gimbal"]["pan"], doc["gimbal"]["tilt"]),
            antennas=tuple(
                (
                    a["id"],
                    a["x"],
                    a["y"],
                    a["heading"],
                    a["orientation"],
                    a["target_orientation"],
                    a["tolerance"],
                    a.get("grasped_by"),
                    tuple(a["grasp_offset"]) if a.get("grasp_offset") is not None else None,
                )
                for a in doc["antennas"]
            ),
            sim_time=doc["sim_time"],
            reset_count=doc["reset_count"],
        )

    @staticmethod
    def from_yaml(text: str) -> "WorldSnapshot":
        return WorldSnapshot.from_document(yaml.safe_load(text))


def snapshot(state: TwinState) -> WorldSnapshot:
    """Capture an immutable copy of the world. restore(snapshot(s)) == s."""
    return WorldSnapshot(
        rover=(state.rover.x, state.rover.y, state.rover.heading),
        omega_left=state.omega_left,
        omega_right=state.omega_right,
        arm_angles=tuple(state.arm.angles),
        gripper=state.arm.gripper,
        gimbal=(state.gimbal.pan, state.gimbal.tilt),
        antennas=tuple(
            (
                a.id,
                a.pose.x,
                a.pose.y,
                a.pose.heading,
                a.orientation,
                a.target_orientation,
                a.tolerance,
                a.grasped_by,
                a.grasp_offset,
            )
            for a in state.antennas
        ),
        sim_time=state.sim_time,
        reset_count=state.reset_count,
    )


def restore(snap: WorldSnapshot) -> TwinState:
    """Rebuild a mutable TwinState from a snapshot, field for field."""
    return TwinState(
        rover=Pose2D(*snap.rover),
        omega_left=snap.omega_left,
        omega_right=snap.omega_right,
        arm=JointVector(angles=list(snap.arm_angles), gripper=snap.gripper),
        gimbal=GimbalState(*snap.gimbal),
        antennas=[
            AntennaNode(
                id=a[0],
                pose=Pose2D(a[1], a[2], a[3]),
                orientation=a[4],
                target_orientation=a[5],
                tolerance=a[6],
                grasped_by=a[7],
                grasp_offset=a[8],
            )
            for a in snap.antennas
        ],
        sim_time=snap.sim_time,
        reset_count=snap.reset_count,
    )


class ScenarioNotLoaded(RuntimeError):
    """reset_world called before an initial snapshot was registered."""


def reset_world(state: TwinState, initial: WorldSnapshot | None) -> TwinState:
    """Revert the world to its initial snapshot.

    Session accounting survives the reset: sim_time is preserved (time to
    completion keeps running) and reset_count is incremented.
    """
    if initial is None:
        raise ScenarioNotLoaded("no initial snapshot registered; load a scenario first")
    fresh = restore(initial)
    fresh.sim_time = state.sim_time
    fresh.reset_count = state.reset_count + 1
    return fresh


# ---------------------------------------------------------------------------
# Configuration document parsing
# ---------------------------------------------------------------------------

# Target dimensions for unit-suffixed scalars. Bare numbers are assumed to be
# in the internal unit of the dimension (rad, m, s).
_UNIT_FACTORS = {
    "angle": {"deg": math.pi / 180.0, "rad": 1.0},
    "length": {"m": 1.0},
    "duration": {"ms": 1e-3, "s": 1.0},
    "plain": {},
}


def parse_quantity(value: Any, kind: str, where: str) -> float:
    """Parse a config scalar that may carry a unit suffix (``0.0888 deg``, ``20 ms``).

    ``kind`` selects the dimension; the returned value is in internal units
    (radians, meters, seconds, or dimensionless).
    """
    if isinstance(value, bool):
        raise ConfigError(where, f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        parts = value.strip().split()
        if len(parts) == 2:
            num, unit = parts
        elif len(parts) == 1:
            num, unit = parts[0], None
        else:
            raise ConfigError(where, f"cannot parse quantity {value!r}")
        try:
            x = float(num)
        except ValueError:
            raise ConfigError(where, f"cannot parse number in {value!r}") from None
        if unit is None:
            return x
        factors = _UNIT_FACTORS.get(kind, {})
        if unit not in factors:
            raise ConfigError(where, f"unit {unit!r} not valid for a {kind} field")
        return x * factors[unit]
    raise ConfigError(where, f"expected a number or 'number unit' string, got {value!r}")


def _angle(doc: dict, key: str, default: float, where: str) -> float:
    if key not in doc or doc[key] is None:
        return default
    return parse_quantity(doc[key], "angle", f"{where}.{key}")


def _require(doc: dict, key: str, where: str) -> Any:
    if key not in doc:
        raise ConfigError(f"{where}.{key}", "missing required field")
    return doc[key]


@dataclass
class BusTimingConfig:
    """Per-direction latency models for the message bus (values in ms)."""

    command: "LatencyModelConfig"
    telemetry: "LatencyModelConfig"


@dataclass
class LatencyModelConfig:
    base_delay_ms: float = 0.0
    jitter_half_width_ms: float = 0.0
    seed: int = 0

    def validate(self, where: str) -> None:
        if self.base_delay_ms < 0:
            raise ConfigError(f"{where}.base_delay", "must be >= 0")
        if self.jitter_half_width_ms < 0:
            raise ConfigError(f"{where}.jitter_half_width", "must be >= 0")


@dataclass
class TwinConfig:
    """Everything load_config produces: physics, arm chain, scenario, bus timing."""

    physics: PhysicsParams
    chain: "KinematicChain"
    scenario: "ScenarioSpec"
    bus: BusTimingConfig
    source_text: str = ""


def _parse_latency_model(doc: dict | None, where: str) -> LatencyModelConfig:
    if doc is None:
        return LatencyModelConfig()
    base_s = parse_quantity(doc.get("base_delay", 0.0), "duration", f"{where}.base_delay")
    jitter_s = parse_quantity(
        doc.get("jitter_half_width", 0.0), "duration", f"{where}.jitter_half_width"
    )
    # bare numbers in latency blocks are seconds; store ms
    model = LatencyModelConfig(
        base_delay_ms=base_s * 1e3,
        jitter_half_width_ms=jitter_s * 1e3,
        seed=int(doc.get("seed", 0)),
    )
    model.validate(where)
    return model


def _parse_physics(doc: dict | None) -> PhysicsParams:
    doc = doc or {}
    params = PhysicsParams(
        gravity=parse_quantity(doc.get("gravity", -9.81), "plain", "physics.gravity"),
        mu_static=parse_quantity(doc.get("mu_static", 0.6), "plain", "physics.mu_static"),
        mu_dynamic=parse_quantity(doc.get("mu_dynamic", 0.45), "plain", "physics.mu_dynamic"),
        wheel_torque_max=parse_quantity(
            doc.get("wheel_torque_max", 1.4), "plain", "physics.wheel_torque_max"
        ),
        joint_step=_angle(doc, "joint_step", DEFAULT_JOINT_STEP_RAD, "physics"),
        rover_mass=parse_quantity(doc.get("rover_mass", 10.0), "plain", "physics.rover_mass"),
        wheel_radius=parse_quantity(
            doc.get("wheel_radius", 0.0762), "length", "physics.wheel_radius"
        ),
        wheel_base=parse_quantity(doc.get("wheel_base", 0.39), "length", "physics.wheel_base"),
    )
    params.validate()
    return params


def _parse_scenario(doc: dict | None) -> "ScenarioSpec":
    from .scenario import ScenarioSpec  # cycle: scenario imports core types

    doc = doc or {}
    start = doc.get("start_pose") or {}
    pose = Pose2D(
        x=parse_quantity(start.get("x", 0.0), "length", "scenario.start_pose.x"),
        y=parse_quantity(start.get("y", 0.0), "length", "scenario.start_pose.y"),
        heading=normalize_angle(_angle(start, "heading", 0.0, "scenario.start_pose")),
    )
    antennas = []
    for i, a in enumerate(doc.get("antennas", [])):
        where = f"scenario.antennas[{i}]"
        node = AntennaNode(
            id=str(a.get("id", f"antenna{i}")),
            pose=Pose2D(
                x=parse_quantity(_require(a, "x", where), "length", f"{where}.x"),
                y=parse_quantity(_require(a, "y", where), "length", f"{where}.y"),
                heading=normalize_angle(_angle(a, "orientation", 0.0, where)),
            ),
            orientation=normalize_angle(_angle(a, "orientation", 0.0, where)),
            target_orientation=normalize_angle(
                parse_quantity(_require(a, "target_orientation", where), "angle", f"{where}.target_orientation")
            ),
            tolerance=_angle(a, "tolerance", math.radians(5.0), where),
        )
        node.validate(where)
        antennas.append(node)

    time_limit = doc.get("time_limit")
    if time_limit is not None:
        time_limit = parse_quantity(time_limit, "duration", "scenario.time_limit")
    attempts = doc.get("attempts_allowed")
    if attempts is not None:
        attempts = int(attempts)
        if attempts < 1:
            raise ConfigError("scenario.attempts_allowed", "must be >= 1")

    spec = ScenarioSpec(
        id=str(doc.get("id", "default")),
        antennas=antennas,
        start_pose=pose,
        time_limit=time_limit,
        attempts_allowed=attempts,
        strict_orientation=bool(doc.get("strict_orientation", False)),
    )
    return spec


def load_config(text: str) -> TwinConfig:
    """Parse and validate a configuration document.

    Returns physics parameters, the arm kinematic chain, the scenario, and bus
    timing. Any invariant violation is rejected with the offending field named.
    """
    from .kinematics import parse_chain

    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError("<document>", f"not valid YAML: {e}") from e
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("<document>", "top level must be a mapping")

    physics = _parse_physics(doc.get("physics"))
    chain = parse_chain(doc.get("arm"))
    scenario = _parse_scenario(doc.get("scenario"))
    bus_doc = doc.get("bus") or {}
    bus = BusTimingConfig(
        command=_parse_latency_model(bus_doc.get("command"), "bus.command"),
        telemetry=_parse_latency_model(bus_doc.get("telemetry"), "bus.telemetry"),
    )
    return TwinConfig(physics=physics, chain=chain, scenario=scenario, bus=bus, source_text=text)


def load_config_file(path: str) -> TwinConfig:
    with open(path, "r", encoding="utf-8") as f:
        return load_config(f.read())


def merge_config_documents(base_text: str, override_text: str) -> str:
    """Overlay top-level sections of one config document onto another.

    Used by the CLI to apply a scenario file over a base configuration; the
    merged text is re-serialized so session logs hash the effective document.
    """
    base = yaml.safe_load(base_text) or {}
    override = yaml.safe_load(override_text) or {}
    if not isinstance(base, dict) or not isinstance(override, dict):
        raise ConfigError("<document>", "top level must be a mapping")
    merged = dict(base)
    merged.update(override)
    return yaml.safe_dump(merged, sort_keys=True)

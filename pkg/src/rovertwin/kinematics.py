"""Differential-drive integration, 6-DoF arm forward kinematics, joint quantization.

All functions here are pure and safe to call from any thread.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    ARM_DOF,
    GIMBAL_LIMIT_RAD,
    ConfigError,
    GimbalState,
    JointVector,
    Pose2D,
    normalize_angle,
    parse_quantity,
)

# Below this angular rate the arc integrator switches to its straight-line limit.
OMEGA_STRAIGHT_EPS = 1e-9


@dataclass(frozen=True)
class Link:
    """One revolute link: rotation about ``axis`` by the joint angle, then a fixed offset."""

    offset: tuple[float, float, float]
    axis: tuple[float, float, float]
    joint_min: float
    joint_max: float


@dataclass
class KinematicChain:
    """Serial chain of six revolute links plus a fixed gripper frame.

    ``mount`` locates the arm base in the rover body frame. The default chain
    shipped in configs/ is a plausible hobby-arm geometry, not measured from
    any particular hardware; supply your own link table for a real arm.
    """

    links: list[Link]
    mount: tuple[float, float, float] = (0.0, 0.0, 0.1)
    gripper_offset: tuple[float, float, float] = (0.06, 0.0, 0.0)

    def validate(self, where: str = "arm") -> None:
        if len(self.links) != ARM_DOF:
            raise ConfigError(f"{where}.links", f"exactly {ARM_DOF} links required, got {len(self.links)}")
        for i, link in enumerate(self.links):
            norm = math.sqrt(sum(c * c for c in link.axis))
            if abs(norm - 1.0) > 1e-9:
                raise ConfigError(f"{where}.links[{i}].axis", f"must be unit-norm, |axis| = {norm}")
            if not link.joint_min < link.joint_max:
                raise ConfigError(
                    f"{where}.links[{i}]", f"joint_min {link.joint_min} must be < joint_max {link.joint_max}"
                )

    def clamp_to_limits(self, i: int, angle: float) -> float:
        link = self.links[i]
        return min(max(angle, link.joint_min), link.joint_max)


@dataclass
class EndEffectorPose:
    """Gripper pose in the arm base frame: position plus a proper rotation matrix."""

    position: np.ndarray
    orientation: np.ndarray

    def yaw(self) -> float:
        """Heading of the gripper's x axis projected on the ground plane."""
        return math.atan2(float(self.orientation[1, 0]), float(self.orientation[0, 0]))


DEFAULT_CHAIN_DOC = {
    "mount": [0.0, 0.0, 0.1],
    "gripper_offset": [0.06, 0.0, 0.0],
    "links": [
        {"offset": [0.0, 0.0, 0.12], "axis": [0, 0, 1], "min": "-175 deg", "max": "175 deg"},
        {"offset": [0.04, 0.0, 0.06], "axis": [0, 1, 0], "min": "-100 deg", "max": "100 deg"},
        {"offset": [0.22, 0.0, 0.0], "axis": [0, 1, 0], "min": "-120 deg", "max": "120 deg"},
        {"offset": [0.18, 0.0, 0.0], "axis": [1, 0, 0], "min": "-175 deg", "max": "175 deg"},
        {"offset": [0.06, 0.0, 0.0], "axis": [0, 1, 0], "min": "-100 deg", "max": "100 deg"},
        {"offset": [0.05, 0.0, 0.0], "axis": [1, 0, 0], "min": "-175 deg", "max": "175 deg"},
    ],
}


def _parse_vec3(value, where: str, kind: str = "length") -> tuple[float, float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ConfigError(where, f"expected a 3-vector, got {value!r}")
    return tuple(parse_quantity(v, kind, f"{where}[{i}]") for i, v in enumerate(value))


def parse_chain(doc: dict | None) -> KinematicChain:
    """Build a KinematicChain from the ``arm`` config section (defaults if omitted)."""
    doc = doc or DEFAULT_CHAIN_DOC
    links_doc = doc.get("links", DEFAULT_CHAIN_DOC["links"])
    links = []
    for i, ld in enumerate(links_doc):
        where = f"arm.links[{i}]"
        axis = _parse_vec3(ld.get("axis"), f"{where}.axis", kind="plain")
        norm = math.sqrt(sum(c * c for c in axis))
        if norm == 0.0:
            raise ConfigError(f"{where}.axis", "must be non-zero")
        # normalize exactly-representable axes untouched; others to unit norm
        if abs(norm - 1.0) > 1e-12:
            axis = tuple(c / norm for c in axis)
        links.append(
            Link(
                offset=_parse_vec3(ld.get("offset", [0, 0, 0]), f"{where}.offset"),
                axis=axis,
                joint_min=parse_quantity(ld.get("min", "-175 deg"), "angle", f"{where}.min"),
                joint_max=parse_quantity(ld.get("max", "175 deg"), "angle", f"{where}.max"),
            )
        )
    chain = KinematicChain(
        links=links,
        mount=_parse_vec3(doc.get("mount", DEFAULT_CHAIN_DOC["mount"]), "arm.mount"),
        gripper_offset=_parse_vec3(
            doc.get("gripper_offset", DEFAULT_CHAIN_DOC["gripper_offset"]), "arm.gripper_offset"
        ),
    )
    chain.validate()
    return chain


# ---------------------------------------------------------------------------
# Differential drive
# ---------------------------------------------------------------------------


def step_diff_drive(pose: Pose2D, v_left: float, v_right: float, wheel_base: float, dt: float) -> Pose2D:
    """Advance a planar pose by one exact constant-twist arc.

    v = (v_l + v_r)/2, omega = (v_r - v_l)/wheel_base. The exact arc (rather
    than an Euler step) makes stepping dt twice identical to stepping 2*dt,
    which the determinism and replay machinery relies on.
    """
    for name, v in (("v_left", v_left), ("v_right", v_right), ("dt", dt), ("wheel_base", wheel_base)):
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite, got {v!r}")
    if dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if wheel_base <= 0.0:
        raise ValueError(f"wheel_base must be > 0, got {wheel_base}")

    v = 0.5 * (v_left + v_right)
    omega = (v_right - v_left) / wheel_base
    h = pose.heading
    if abs(omega) < OMEGA_STRAIGHT_EPS:
        return Pose2D(
            x=pose.x + v * dt * math.cos(h),
            y=pose.y + v * dt * math.sin(h),
            heading=normalize_angle(h),
        )
    radius = v / omega
    h2 = h + omega * dt
    return Pose2D(
        x=pose.x + radius * (math.sin(h2) - math.sin(h)),
        y=pose.y - radius * (math.cos(h2) - math.cos(h)),
        heading=normalize_angle(h2),
    )


# ---------------------------------------------------------------------------
# Joint quantization
# ---------------------------------------------------------------------------


def quantize_joint(target: float, step: float) -> float:
    """Snap a commanded joint angle to the nearest multiple of the actuator step.

    Ties round away from zero, so the result never undershoots a half-step
    boundary; |result - target| <= step/2 always holds.
    """
    if step <= 0.0:
        raise ValueError(f"step must be > 0, got {step}")
    if target >= 0.0:
        n = math.floor(target / step + 0.5)
    else:
        n = -math.floor(-target / step + 0.5)
    return n * step


def quantize_within_limits(target: float, step: float, lo: float, hi: float) -> float:
    """Quantize a command while keeping the result inside [lo, hi].

    The target is clamped first; if rounding pushes the quantized value past a
    limit it is pulled back by one step, so the returned angle is always both
    a step multiple and within limits (provided hi - lo >= step).
    """
    q = quantize_joint(min(max(target, lo), hi), step)
    if q > hi:
        q -= step
    elif q < lo:
        q += step
    return q


# ---------------------------------------------------------------------------
# Forward kinematics
# ---------------------------------------------------------------------------


def _rotation_about_axis(axis: tuple[float, float, float], angle: float) -> np.ndarray:
    """Rodrigues rotation: R = I + sin(t) K + (1 - cos(t)) K^2."""
    ux, uy, uz = axis
    s = math.sin(angle)
    c = math.cos(angle)
    k = np.array([[0.0, -uz, uy], [uz, 0.0, -ux], [-uy, ux, 0.0]])
    return np.eye(3) + s * k + (1.0 - c) * (k @ k)


def forward_kinematics(chain: KinematicChain, joints: JointVector) -> EndEffectorPose:
    """Compose per-link transforms (rotate about axis, then fixed offset).

    The base frame sits at the arm mount. Raises ValueError when a joint is
    outside its link limits.
    """
    joints.validate()
    rot = np.eye(3)
    pos = np.zeros(3)
    for i, link in enumerate(chain.links):
        angle = joints.angles[i]
        if angle < link.joint_min - 1e-12 or angle > link.joint_max + 1e-12:
            raise ValueError(
                f"joint {i} angle {angle} outside limits [{link.joint_min}, {link.joint_max}]"
            )
        rot = rot @ _rotation_about_axis(link.axis, angle)
        pos = pos + rot @ np.asarray(link.offset)
    pos = pos + rot @ np.asarray(chain.gripper_offset)
    return EndEffectorPose(position=pos, orientation=rot)


def gripper_world_planar(chain: KinematicChain, joints: JointVector, rover: Pose2D) -> tuple[float, float, float]:
    """Gripper position and yaw in world coordinates, projected to the ground plane.

    Used for antenna grasp checks and rigid transport; the z component of the
    gripper position is ignored because the world model is planar.
    """
    ee = forward_kinematics(chain, joints)
    ch, sh = math.cos(rover.heading), math.sin(rover.heading)
    bx = chain.mount[0] + float(ee.position[0])
    by = chain.mount[1] + float(ee.position[1])
    wx = rover.x + ch * bx - sh * by
    wy = rover.y + sh * bx + ch * by
    wyaw = normalize_angle(rover.heading + ee.yaw())
    return wx, wy, wyaw


# ---------------------------------------------------------------------------
# Gimbal
# ---------------------------------------------------------------------------


def clamp_gimbal(request: GimbalState) -> GimbalState:
    """Clamp pan/tilt to the +-90 degree servo travel."""
    for name in ("pan", "tilt"):
        if not math.isfinite(getattr(request, name)):
            raise ValueError(f"gimbal {name} must be finite")
    return GimbalState(
        pan=min(max(request.pan, -GIMBAL_LIMIT_RAD), GIMBAL_LIMIT_RAD),
        tilt=min(max(request.tilt, -GIMBAL_LIMIT_RAD), GIMBAL_LIMIT_RAD),
    )

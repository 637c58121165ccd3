"""Deterministic digital twin of a two-wheeled rover with a 6-DoF arm.

Twin and physical-rover emulator share one simulation core; a fidelity suite
measures and calibrates the gap between them, and a scenario module scores
antenna-realignment sessions.
"""

from .core import (
    ConfigError,
    GimbalState,
    JointVector,
    PhysicsParams,
    Pose2D,
    TICK_NS,
    TICK_SECONDS,
    TwinConfig,
    TwinState,
    WorldSnapshot,
    load_config,
    load_config_file,
    normalize_angle,
    reset_world,
    restore,
    snapshot,
)
from .kinematics import (
    EndEffectorPose,
    KinematicChain,
    Link,
    clamp_gimbal,
    forward_kinematics,
    quantize_joint,
    step_diff_drive,
)
from .physics import StepInput, SurfaceModel, derive_dynamic_friction, step_world, traction_check
from .bus import Envelope, LatencyModel, LatencyStats, MessageBus, measure_latency
from .emulator import PerturbationProfile, load_profile, load_profile_file, run_emulated
from .scenario import ScenarioSpec, SessionEvent, SessionMetrics, check_alignment, evaluate_session
from .simloop import SessionRun, Simulator, TimedCommand

__version__ = "0.1.0"

"""Antenna-realignment task: alignment checking and session performance metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .core import AntennaNode, ConfigError, Pose2D


def angular_distance_mod_pi(a: float, b: float) -> float:
    """Smallest rotation mapping one dipole axis onto another, in [0, pi/2].

    Dipole antennas are symmetric under a half-turn, so the error metric is
    computed modulo 180 degrees.
    """
    d = math.fmod(a - b, math.pi)
    if d < 0.0:
        d += math.pi
    return min(d, math.pi - d)


def angular_distance(a: float, b: float) -> float:
    """Full-circle angular distance in [0, pi] (strict-orientation mode)."""
    d = math.fmod(a - b, 2.0 * math.pi)
    if d < 0.0:
        d += 2.0 * math.pi
    return min(d, 2.0 * math.pi - d)


@dataclass
class ScenarioSpec:
    """Task definition: antennas with targets, rover start, attempt budget."""

    id: str
    antennas: list[AntennaNode]
    start_pose: Pose2D = field(default_factory=Pose2D)
    time_limit: float | None = None
    attempts_allowed: int | None = None
    strict_orientation: bool = False

    def validate(self) -> None:
        if not self.antennas:
            raise ConfigError("scenario.antennas", "at least one antenna required")
        for i, a in enumerate(self.antennas):
            a.validate(f"scenario.antennas[{i}]")
        if self.attempts_allowed is not None and self.attempts_allowed < 1:
            raise ConfigError("scenario.attempts_allowed", "must be >= 1")


def check_alignment(antenna: AntennaNode, strict: bool = False) -> bool:
    """True iff the antenna sits within tolerance of its target orientation.

    A grasped antenna is never aligned (it is still being manipulated). By
    default the error is measured modulo a half-turn; strict mode uses the
    full circle for non-symmetric payloads.
    """
    if antenna.grasped_by is not None:
        return False
    dist = (angular_distance if strict else angular_distance_mod_pi)(
        antenna.orientation, antenna.target_orientation
    )
    return dist <= antenna.tolerance


@dataclass(frozen=True)
class SessionEvent:
    """One timestamped record in the append-only session event log."""

    t_ns: int
    kind: str
    data: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {"t_ns": self.t_ns, "event": self.kind, **self.data}

    @staticmethod
    def from_record(rec: dict) -> "SessionEvent":
        data = {k: v for k, v in rec.items() if k not in ("t_ns", "event", "rec")}
        return SessionEvent(t_ns=rec["t_ns"], kind=rec["event"], data=data)


EVT_STARTED = "scenario_started"
EVT_RESET = "world_reset"
EVT_ALIGNED = "antenna_aligned"
EVT_MISALIGNED = "antenna_misaligned"
EVT_GRASPED = "antenna_grasped"
EVT_RELEASED = "antenna_released"
EVT_COMPLETED = "scenario_completed"


@dataclass(frozen=True)
class SessionMetrics:
    """Performance numbers for one operator session."""

    time_to_completion: float | None
    reset_count: int
    successes: int
    attempts: int
    success_rate: float


def evaluate_session(events: list[SessionEvent], attempts_allowed: int | None = None) -> SessionMetrics:
    """Compute session metrics from the event log.

    An attempt is the interval between scenario start (or a reset) and the
    next reset or completion. time_to_completion is the time of the first
    completion relative to scenario start, absent if the task was never
    completed. When attempts_allowed is given, only the first X attempts
    count toward the success rate.
    """
    ordered = sorted(events, key=lambda e: e.t_ns)
    start_ns = None
    for e in ordered:
        if e.kind == EVT_STARTED:
            start_ns = e.t_ns
            break
    if start_ns is None:
        raise ValueError("event log has no scenario start event")

    reset_count = sum(1 for e in ordered if e.kind == EVT_RESET)
    completion_ns = None
    attempt_results: list[bool] = []
    attempt_open = False
    attempt_succeeded = False
    for e in ordered:
        if e.kind == EVT_STARTED:
            attempt_open = True
            attempt_succeeded = False
        elif e.kind == EVT_COMPLETED:
            if completion_ns is None:
                completion_ns = e.t_ns
            attempt_succeeded = True
        elif e.kind == EVT_RESET:
            if attempt_open:
                attempt_results.append(attempt_succeeded)
            attempt_open = True
            attempt_succeeded = False
    if attempt_open:
        attempt_results.append(attempt_succeeded)

    if attempts_allowed is not None:
        attempt_results = attempt_results[:attempts_allowed]
    attempts = len(attempt_results)
    successes = sum(attempt_results)
    return SessionMetrics(
        time_to_completion=None if completion_ns is None else (completion_ns - start_ns) / 1e9,
        reset_count=reset_count,
        successes=successes,
        attempts=attempts,
        success_rate=(successes / attempts) if attempts > 0 else 0.0,
    )

"""Twin-accuracy metrics and calibration.

Four fidelity attributes are measured from paired physical/digital session
logs: message latency per direction, absolute joint error per joint, joint
movement resolution, and driving distance error. Calibration is staged and
separable: latency first, then resolution, then joint bias/noise, then a 1-D
search on the drive knob (wheel torque scale), exploiting the fact that each
emulator perturbation moves exactly one metric in steady state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import fmean

from .bus import measure_latency
from .core import LatencyModelConfig, TwinConfig
from .emulator import PerturbationProfile
from .simloop import SessionRun, Simulator, TimedCommand

DEFAULT_SETTLE_NS = 500_000_000  # steady-state window after each arm command
CONTINUOUS_THRESHOLD_RAD = math.radians(1e-3)
GCD_TOL_RAD = math.radians(1e-4)


# ---------------------------------------------------------------------------
# log access helpers
# ---------------------------------------------------------------------------


def joint_series(run: SessionRun, joint: int) -> list[tuple[int, float]]:
    """(measurement time, reported angle) samples for one joint."""
    return [
        (e.payload["t_ns"], e.payload["angles"][joint])
        for e in run.telemetry
        if e.topic == "joint_states"
    ]


def odometry_series(run: SessionRun) -> list[tuple[int, float, float]]:
    return [
        (e.payload["t_ns"], e.payload["x"], e.payload["y"])
        for e in run.telemetry
        if e.topic == "odometry"
    ]


def path_length(run: SessionRun, window_ns: tuple[int, int] | None = None) -> float:
    """Distance traveled, summed over odometry increments (time-sorted)."""
    pts = sorted(odometry_series(run))
    if window_ns is not None:
        lo, hi = window_ns
        pts = [p for p in pts if lo <= p[0] <= hi]
    if not pts:
        raise ValueError("telemetry contains no odometry in the requested window")
    total = 0.0
    for (_, x0, y0), (_, x1, y1) in zip(pts, pts[1:]):
        total += math.hypot(x1 - x0, y1 - y0)
    return total


def arm_command_timeline(commands: list[TimedCommand]) -> list[tuple[int, list[float]]]:
    """Absolute-target timeline from the arm commands of a script, time-sorted."""
    timeline = []
    current = [0.0] * 6
    for cmd in sorted(commands, key=lambda c: c.t_ns):
        if cmd.topic != "arm_cmd":
            continue
        targets = cmd.payload.get("targets")
        if targets is None:
            continue
        current = [float(t) for t in targets]
        timeline.append((cmd.t_ns, list(current)))
    return timeline


def _joint_change_times(timeline: list[tuple[int, list[float]]]) -> list[list[tuple[int, float]]]:
    """Per-joint step functions [(change time, value), ...], starting at zero."""
    per_joint: list[list[tuple[int, float]]] = [[(0, 0.0)] for _ in range(6)]
    for t, targets in timeline:
        for j in range(6):
            if targets[j] != per_joint[j][-1][1]:
                per_joint[j].append((t, targets[j]))
    return per_joint


def settled_residuals(
    run: SessionRun,
    commands: list[TimedCommand],
    settle_ns: int = DEFAULT_SETTLE_NS,
) -> list[list[tuple[float, float]]]:
    """Per joint: (commanded, measured) pairs over settled samples.

    A sample is settled for joint j when j's target last changed at least
    settle_ns earlier, excluding command-tracking transients from the error
    statistics. Command timing uses send timestamps, so the settle window must
    exceed the worst-case command latency.
    """
    timeline = _joint_change_times(arm_command_timeline(commands))
    samples = [
        (e.payload["t_ns"], e.payload["angles"])
        for e in run.telemetry
        if e.topic == "joint_states"
    ]
    samples.sort()
    out: list[list[tuple[float, float]]] = [[] for _ in range(6)]
    for j in range(6):
        changes = timeline[j]
        idx = 0
        for t, angles in samples:
            while idx + 1 < len(changes) and changes[idx + 1][0] <= t:
                idx += 1
            if t >= changes[idx][0] + settle_ns:
                out[j].append((changes[idx][1], angles[j]))
    return out


# ---------------------------------------------------------------------------
# the four metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LatencyDelta:
    """Median physical minus median digital latency, per direction (ms).

    Negative values (twin slower than the physical system) are reported as-is
    but floored at zero for injection: the twin's messages can only be slowed.
    """

    command_ms: float
    telemetry_ms: float

    @property
    def injected_command_ms(self) -> float:
        return max(0.0, self.command_ms)

    @property
    def injected_telemetry_ms(self) -> float:
        return max(0.0, self.telemetry_ms)


def metric_latency(physical: SessionRun, digital: SessionRun) -> LatencyDelta:
    def medians(run: SessionRun) -> tuple[float, float]:
        cmd = measure_latency(run.commands).median_ms
        tel = measure_latency(run.telemetry).median_ms
        return cmd, tel

    p_cmd, p_tel = medians(physical)
    d_cmd, d_tel = medians(digital)
    return LatencyDelta(command_ms=p_cmd - d_cmd, telemetry_ms=p_tel - d_tel)


def metric_joint_error(
    run: SessionRun,
    commands: list[TimedCommand],
    settle_ns: int = DEFAULT_SETTLE_NS,
) -> list[float]:
    """Mean |commanded - measured| per joint over settled samples, radians."""
    residuals = settled_residuals(run, commands, settle_ns)
    if all(not r for r in residuals):
        raise ValueError("no settled samples overlap the command timeline")
    return [fmean(abs(m - c) for c, m in r) if r else 0.0 for r in residuals]


@dataclass(frozen=True)
class ResolutionEstimate:
    step_rad: float
    effectively_continuous: bool
    n_levels: int


def _float_gcd(values: list[float], tol: float) -> float:
    g = 0.0
    for v in values:
        a, b = max(g, v), min(g, v)
        while b > tol:
            r = math.fmod(a, b)
            if r > b / 2:
                r = b - r  # fold near-multiples back toward zero
            a, b = b, r
        g = a
    return g


def metric_joint_resolution(
    series: list[tuple[int, float]],
    min_run_ticks: int = 25,
    tol_rad: float = GCD_TOL_RAD,
) -> ResolutionEstimate:
    """Smallest movement quantum of a (noise-free) settled joint trajectory.

    Settled positions are runs of identical samples at least min_run_ticks
    long; the estimate is the greatest common quantum of the steps between
    consecutive distinct settled positions. An estimate below one
    thousandth of a degree is flagged effectively continuous. Noisy physical
    logs never settle to identical samples; calibration recovers their quantum
    through the command schedule instead (see resolution_from_schedule).
    """
    ordered = sorted(series)
    levels: list[float] = []
    run_val: float | None = None
    run_len = 0
    for _, v in ordered:
        if run_val is not None and v == run_val:
            run_len += 1
        else:
            run_val = v
            run_len = 1
        if run_len == min_run_ticks:
            if not levels or levels[-1] != run_val:
                levels.append(run_val)
    if len(levels) < 2:
        raise ValueError("need at least two distinct settled positions")
    diffs = [abs(b - a) for a, b in zip(levels, levels[1:]) if b != a]
    if not diffs:
        raise ValueError("settled positions never changed")
    d_min = min(diffs)
    if all(abs(d / d_min - round(d / d_min)) * d_min <= tol_rad for d in diffs):
        # adjacent-level subtraction rounds by a few ulp; the mode of the
        # single-step diffs is the exact quantum bit pattern
        singles = [d for d in diffs if round(d / d_min) == 1]
        counts: dict[float, int] = {}
        for d in singles:
            counts[d] = counts.get(d, 0) + 1
        step = max(counts, key=lambda d: (counts[d], -d))
    else:
        step = _float_gcd(diffs, tol_rad)
    return ResolutionEstimate(
        step_rad=step,
        effectively_continuous=step < CONTINUOUS_THRESHOLD_RAD,
        n_levels=len(levels),
    )


def resolution_from_schedule(
    run: SessionRun,
    levels: list["LevelWindow"],
    command_step: float,
    settle_ns: int = DEFAULT_SETTLE_NS,
) -> ResolutionEstimate:
    """Quantum recovery that survives reporting noise.

    Each commanded hold window is averaged into one denoised level; the level
    steps are classified as integer multiples of the commanded staircase step
    and the quantum is gcd(multiples) * command_step. Exact by construction
    (the gcd runs on integers), but blind to any resolution finer than the
    commanded grid: a staircase commanded in multiples of q cannot reveal a
    sub-q actuator.
    """
    samples_by_joint: dict[int, list[tuple[int, float]]] = {}
    means: list[float] = []
    for win in levels:
        if win.joint not in samples_by_joint:
            samples_by_joint[win.joint] = joint_series(run, win.joint)
        vals = [
            v
            for t, v in samples_by_joint[win.joint]
            if win.t_start_ns + settle_ns <= t < win.t_end_ns
        ]
        if not vals:
            raise ValueError(f"no settled samples inside level window at {win.t_start_ns} ns")
        means.append(fmean(vals))
    if len(means) < 2:
        raise ValueError("need at least two level windows")
    multiples = [round(abs(b - a) / command_step) for a, b in zip(means, means[1:])]
    nonzero = [m for m in multiples if m > 0]
    if not nonzero:
        raise ValueError("staircase never produced a detectable step")
    g = nonzero[0]
    for m in nonzero[1:]:
        g = math.gcd(g, m)
    return ResolutionEstimate(step_rad=g * command_step, effectively_continuous=False, n_levels=len(means))


@dataclass(frozen=True)
class DrivingError:
    distance_physical_m: float
    distance_digital_m: float

    @property
    def error_m(self) -> float:
        return abs(self.distance_physical_m - self.distance_digital_m)

    @property
    def error_pct(self) -> float:
        ref = max(self.distance_physical_m, 1e-9)
        return 100.0 * self.error_m / ref


def metric_driving_error(
    physical: SessionRun,
    digital: SessionRun,
    window_ns: tuple[int, int] | None = None,
) -> DrivingError:
    return DrivingError(
        distance_physical_m=path_length(physical, window_ns),
        distance_digital_m=path_length(digital, window_ns),
    )


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FidelityReport:
    """The four metric gaps between a physical log and a digital log."""

    latency_command_delta_ms: float
    latency_telemetry_delta_ms: float
    joint_error_physical: tuple[float, ...]
    joint_error_digital: tuple[float, ...]
    joint_resolution_physical: float
    joint_resolution_digital: float
    driving: DrivingError

    @property
    def joint_error_delta(self) -> tuple[float, ...]:
        return tuple(abs(p - d) for p, d in zip(self.joint_error_physical, self.joint_error_digital))

    @property
    def joint_error_delta_max(self) -> float:
        return max(self.joint_error_delta)

    @property
    def resolution_delta(self) -> float:
        return abs(self.joint_resolution_physical - self.joint_resolution_digital)

    def to_document(self) -> dict:
        return {
            "latency_delta_ms": {
                "command": self.latency_command_delta_ms,
                "telemetry": self.latency_telemetry_delta_ms,
            },
            "joint_abs_error_rad": {
                "physical": list(self.joint_error_physical),
                "digital": list(self.joint_error_digital),
                "delta": list(self.joint_error_delta),
                "delta_max": self.joint_error_delta_max,
            },
            "joint_resolution_rad": {
                "physical": self.joint_resolution_physical,
                "digital": self.joint_resolution_digital,
                "delta": self.resolution_delta,
            },
            "driving_distance": {
                "physical_m": self.driving.distance_physical_m,
                "digital_m": self.driving.distance_digital_m,
                "error_m": self.driving.error_m,
                "error_pct": self.driving.error_pct,
            },
        }


def fidelity_report(physical: SessionRun, digital: SessionRun, routine) -> FidelityReport:
    lat = metric_latency(physical, digital)
    err_p = metric_joint_error(physical, routine.commands, routine.settle_ns)
    err_d = metric_joint_error(digital, routine.commands, routine.settle_ns)
    fine = [w for w in routine.levels if w.joint == routine.fine_joint]
    res_p = resolution_from_schedule(physical, fine, routine.command_step, routine.settle_ns)
    res_d = resolution_from_schedule(digital, fine, routine.command_step, routine.settle_ns)
    driving = metric_driving_error(physical, digital, routine.drive_window_ns)
    return FidelityReport(
        latency_command_delta_ms=abs(lat.command_ms),
        latency_telemetry_delta_ms=abs(lat.telemetry_ms),
        joint_error_physical=tuple(err_p),
        joint_error_digital=tuple(err_d),
        joint_resolution_physical=res_p.step_rad,
        joint_resolution_digital=res_d.step_rad,
        driving=driving,
    )


# ---------------------------------------------------------------------------
# calibration
# ---------------------------------------------------------------------------

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, lo: float, hi: float, tol: float = 1e-4, max_iter: int = 200):
    """Minimize a unimodal scalar function on [lo, hi].

    Returns (x, f(x), converged); converged is False when the interval failed
    to shrink below tol within the iteration budget.
    """
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    iterations = 0
    while (b - a) > tol and iterations < max_iter:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
        iterations += 1
    x = (a + b) / 2.0
    return x, f(x), (b - a) <= tol


@dataclass
class CalibrationResult:
    """Fitted twin corrections plus before/after fidelity reports."""

    injected_latency_command_ms: float
    injected_latency_telemetry_ms: float
    latency_delta: LatencyDelta
    joint_bias_fit: tuple[float, ...]
    joint_noise_fit: float
    quant_step_fit: float
    torque_scale_fit: float
    mu_dynamic_fit: float | None
    pre: FidelityReport
    residuals: FidelityReport
    converged: bool
    within_tolerance: bool = field(default=False)

    def to_profile(self, seed: int = 0) -> PerturbationProfile:
        """Corrections expressed as a twin-side perturbation profile."""
        return PerturbationProfile(
            extra_latency=LatencyModelConfig(base_delay_ms=self.injected_latency_command_ms, seed=seed),
            extra_latency_telemetry=LatencyModelConfig(
                base_delay_ms=self.injected_latency_telemetry_ms, seed=seed + 1
            ),
            joint_bias=list(self.joint_bias_fit),
            joint_noise_sigma=self.joint_noise_fit,
            quant_step_override=self.quant_step_fit,
            mu_dynamic_override=self.mu_dynamic_fit,
            torque_scale=self.torque_scale_fit,
        )

    def to_document(self) -> dict:
        return {
            "injected_latency_ms": {
                "command": self.injected_latency_command_ms,
                "telemetry": self.injected_latency_telemetry_ms,
            },
            "latency_delta_ms": {
                "command": self.latency_delta.command_ms,
                "telemetry": self.latency_delta.telemetry_ms,
            },
            "joint_bias_fit_rad": list(self.joint_bias_fit),
            "joint_noise_fit_rad": self.joint_noise_fit,
            "quant_step_fit_rad": self.quant_step_fit,
            "torque_scale_fit": self.torque_scale_fit,
            "mu_dynamic_fit": self.mu_dynamic_fit,
            "converged": self.converged,
            "within_tolerance": self.within_tolerance,
            "pre": self.pre.to_document(),
            "residuals": self.residuals.to_document(),
        }


# published round-trip tolerances (at the 10 ms timestep)
TOL_LATENCY_MS = 10.0
TOL_JOINT_ERROR_RAD = math.radians(0.05)
TOL_DRIVING_PCT = 5.0


def _within_tolerance(report: FidelityReport) -> bool:
    return (
        report.latency_command_delta_ms <= TOL_LATENCY_MS
        and report.latency_telemetry_delta_ms <= TOL_LATENCY_MS
        and report.joint_error_delta_max <= TOL_JOINT_ERROR_RAD
        and report.resolution_delta == 0.0
        and report.driving.error_pct <= TOL_DRIVING_PCT
    )


def fit_drive_knob(
    physical_distance: float,
    config: TwinConfig,
    routine,
    seed: int,
    knob: str = "torque_scale",
    bounds: tuple[float, float] = (0.2, 1.0),
    tol: float = 1e-4,
):
    """1-D golden-section fit of the driving knob against the course distance."""

    def objective(value: float) -> float:
        profile = PerturbationProfile()
        if knob == "torque_scale":
            profile.torque_scale = value
        elif knob == "mu_dynamic":
            profile.mu_dynamic_override = value
        else:
            raise ValueError(f"unknown drive knob {knob!r}")
        sim = Simulator(config, profile=profile, seed=seed, sim_id="fit")
        run = sim.run_script(routine.drive_commands_rel, duration_s=routine.drive_duration_s)
        return abs(path_length(run) - physical_distance)

    return golden_section(objective, bounds[0], bounds[1], tol=tol), objective


def calibrate(
    physical: SessionRun,
    config: TwinConfig,
    routine,
    seed: int = 0,
    drive_knob: str = "torque_scale",
) -> CalibrationResult:
    """Fit twin corrections from one physical run of the standard routine.

    Stages: latency delta by median subtraction; quantum by schedule-aware
    gcd; per-joint bias by settled means and noise by folded-normal
    inversion; then the drive knob by golden-section on course distance.
    The fitted corrections are applied to a verification twin and the
    residual report is computed against the same physical log.
    """
    baseline = Simulator(config, seed=seed, sim_id="twin").run_script(
        routine.commands, duration_s=routine.duration_s
    )
    pre = fidelity_report(physical, baseline, routine)

    lat = metric_latency(physical, baseline)

    fine = [w for w in routine.levels if w.joint == routine.fine_joint]
    quant = resolution_from_schedule(physical, fine, routine.command_step, routine.settle_ns)

    residuals_by_joint = settled_residuals(physical, routine.commands, routine.settle_ns)
    bias = [fmean(m - c for c, m in r) if r else 0.0 for r in residuals_by_joint]
    abs_dev = [abs(m - c - bias[j]) for j, r in enumerate(residuals_by_joint) for c, m in r]
    noise = fmean(abs_dev) * math.sqrt(math.pi / 2.0) if abs_dev else 0.0

    physical_distance = path_length(physical, routine.drive_window_ns)
    (knob_fit, _knob_res, converged), _ = fit_drive_knob(
        physical_distance, config, routine, seed, knob=drive_knob
    )

    result = CalibrationResult(
        injected_latency_command_ms=lat.injected_command_ms,
        injected_latency_telemetry_ms=lat.injected_telemetry_ms,
        latency_delta=lat,
        joint_bias_fit=tuple(bias),
        joint_noise_fit=noise,
        quant_step_fit=quant.step_rad,
        torque_scale_fit=knob_fit if drive_knob == "torque_scale" else 1.0,
        mu_dynamic_fit=knob_fit if drive_knob == "mu_dynamic" else None,
        pre=pre,
        residuals=pre,  # replaced below
        converged=converged,
    )

    corrected = Simulator(
        config, profile=result.to_profile(seed=seed + 1000), seed=seed + 1, sim_id="twin-corrected"
    ).run_script(routine.commands, duration_s=routine.duration_s)
    result.residuals = fidelity_report(physical, corrected, routine)
    result.within_tolerance = _within_tolerance(result.residuals)
    return result

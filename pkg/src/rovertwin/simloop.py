"""The deterministic fixed-timestep simulation loop.

One Simulator instance drives either the digital twin or the physical-rover
emulator (same core, optional perturbation profile). Per tick, in order:

1. delivery pass: command envelopes whose delay elapsed are applied, due
   telemetry envelopes are handed to the session log;
2. telemetry for the current state is published (sent at the tick timestamp);
3. staged commands (script entries or live submissions) are published;
4. the physics core advances one tick;
5. scenario transitions (grasp/alignment/completion) are evaluated.

Because publishing always happens after the delivery pass at the same
timestamp, a zero-delay message is delivered on the next tick after send, and
an N-tick delay is delivered exactly N ticks later. All randomness (bus
jitter, reporting noise) comes from generators seeded once at construction,
so identical (config, profile, seed, command log) runs are byte-identical.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace

from .bus import COMMAND_TOPICS, Envelope, LatencyModel, MessageBus, SENDER_CONSOLE, SENDER_SIM
from .core import (
    TICK_NS,
    TICK_SECONDS,
    GimbalState,
    TwinConfig,
    TwinState,
    WorldSnapshot,
    reset_world,
    restore,
    snapshot,
)
from .emulator import PerturbationProfile
from .kinematics import clamp_gimbal, quantize_within_limits
from .physics import GRIPPER_CLOSED, StepInput, step_world, update_grasp_state
from .scenario import (
    EVT_ALIGNED,
    EVT_COMPLETED,
    EVT_GRASPED,
    EVT_MISALIGNED,
    EVT_RELEASED,
    EVT_RESET,
    EVT_STARTED,
    SessionEvent,
    check_alignment,
)


@dataclass(frozen=True)
class TimedCommand:
    """A command scheduled for publication at a given sim time."""

    t_ns: int
    topic: str
    payload: dict


@dataclass
class SessionRun:
    """Everything a finished headless run produced."""

    telemetry: list[Envelope]
    commands: list[Envelope]
    events: list[SessionEvent]
    final_state: TwinState
    sim_id: str
    seed: int


def _combined_latency(base, extra) -> LatencyModel:
    if extra is None or (extra.base_delay_ms == 0.0 and extra.jitter_half_width_ms == 0.0):
        return LatencyModel.from_config(base)
    return LatencyModel(
        base_delay_ms=base.base_delay_ms + extra.base_delay_ms,
        jitter_half_width_ms=base.jitter_half_width_ms + extra.jitter_half_width_ms,
        seed=base.seed + extra.seed,
    )


class Simulator:
    """Owns the twin state and advances it deterministically."""

    def __init__(
        self,
        config: TwinConfig,
        *,
        profile: PerturbationProfile | None = None,
        seed: int = 0,
        sim_id: str = "twin",
    ):
        self.config = config
        self.profile = profile or PerturbationProfile()
        self.profile.validate()
        self.seed = seed
        self.sim_id = sim_id

        params = config.physics
        if self.profile.mu_dynamic_override is not None:
            params = replace(params, mu_dynamic=self.profile.mu_dynamic_override)
        if self.profile.torque_scale != 1.0:
            params = replace(params, wheel_torque_max=params.wheel_torque_max * self.profile.torque_scale)
        params.validate()
        self.params = params
        self.chain = config.chain
        self.quant_step = (
            self.profile.quant_step_override
            if self.profile.quant_step_override is not None
            else config.physics.joint_step
        )

        extra_tel = (
            self.profile.extra_latency_telemetry
            if self.profile.extra_latency_telemetry is not None
            else self.profile.extra_latency
        )
        self.bus = MessageBus(
            command_latency=_combined_latency(config.bus.command, self.profile.extra_latency),
            telemetry_latency=_combined_latency(config.bus.telemetry, extra_tel),
        )
        self._noise_rng = random.Random(f"jointnoise:{seed}")

        scen = config.scenario
        self.state = TwinState(
            rover=replace(scen.start_pose),
            antennas=[a.copy() for a in scen.antennas],
        )
        self.initial_snapshot: WorldSnapshot = snapshot(self.state)
        self._drive = StepInput()
        self._staged: list[tuple[str, dict]] = []
        self._script: list[TimedCommand] = []
        self._script_pos = 0

        self.telemetry: list[Envelope] = []
        self.command_log: list[Envelope] = []
        self.events: list[SessionEvent] = []
        self._pending_event_payloads: list[dict] = []

        self._aligned = {a.id: check_alignment(a, scen.strict_orientation) for a in self.state.antennas}
        self._completed_this_attempt = all(self._aligned.values()) if self._aligned else False
        self._log_event(EVT_STARTED, {"scenario": scen.id})

    # ------------------------------------------------------------------
    # command intake
    # ------------------------------------------------------------------

    def load_script(self, commands: list[TimedCommand]) -> None:
        self._script = sorted(commands, key=lambda c: c.t_ns)
        self._script_pos = 0

    def submit(self, topic: str, payload: dict) -> None:
        """Stage a live command; it is published on the next tick."""
        self._staged.append((topic, payload))

    # ------------------------------------------------------------------
    # per-tick work
    # ------------------------------------------------------------------

    def _log_event(self, kind: str, data: dict | None = None) -> None:
        evt = SessionEvent(t_ns=self.state.sim_time, kind=kind, data=data or {})
        self.events.append(evt)
        self._pending_event_payloads.append(evt.to_record())

    def _apply_command(self, env: Envelope) -> None:
        payload = env.payload
        if env.topic == "drive_cmd":
            if "torque_left" in payload or "torque_right" in payload:
                self._drive = StepInput(
                    left=float(payload.get("torque_left", 0.0)),
                    right=float(payload.get("torque_right", 0.0)),
                    mode="torque",
                )
            else:
                self._drive = StepInput(
                    left=float(payload.get("v_left", 0.0)),
                    right=float(payload.get("v_right", 0.0)),
                    mode="velocity",
                )
        elif env.topic == "arm_cmd":
            targets = payload.get("targets")
            if targets is not None:
                for i, t in enumerate(targets):
                    link = self.chain.links[i]
                    self.state.arm.angles[i] = quantize_within_limits(
                        float(t), self.quant_step, link.joint_min, link.joint_max
                    )
            if "gripper" in payload:
                self.state.arm.gripper = min(max(float(payload["gripper"]), 0.0), 1.0)
        elif env.topic == "gimbal_cmd":
            self.state.gimbal = clamp_gimbal(
                GimbalState(pan=float(payload.get("pan", 0.0)), tilt=float(payload.get("tilt", 0.0)))
            )
        elif env.topic == "reset_cmd":
            self.state = reset_world(self.state, self.initial_snapshot)
            self._drive = StepInput()
            self._log_event(EVT_RESET, {"count": self.state.reset_count})
            self._aligned = {
                a.id: check_alignment(a, self.config.scenario.strict_orientation)
                for a in self.state.antennas
            }
            self._completed_this_attempt = all(self._aligned.values()) if self._aligned else False

    def _reported_joints(self) -> list[float]:
        angles = list(self.state.arm.angles)
        bias = self.profile.joint_bias
        sigma = self.profile.joint_noise_sigma
        if sigma > 0.0:
            angles = [a + b + self._noise_rng.gauss(0.0, sigma) for a, b in zip(angles, bias)]
        elif any(b != 0.0 for b in bias):
            angles = [a + b for a, b in zip(angles, bias)]
        return angles

    def _publish_telemetry(self, now: int) -> None:
        s = self.state
        self.bus.publish(
            "odometry",
            {
                "x": s.rover.x,
                "y": s.rover.y,
                "heading": s.rover.heading,
                "omega_left": s.omega_left,
                "omega_right": s.omega_right,
                "reset_count": s.reset_count,
                "t_ns": now,
            },
            now,
            SENDER_SIM,
        )
        self.bus.publish(
            "joint_states",
            {"angles": self._reported_joints(), "gripper": s.arm.gripper, "t_ns": now},
            now,
            SENDER_SIM,
        )
        self.bus.publish(
            "gimbal_state",
            {"pan": s.gimbal.pan, "tilt": s.gimbal.tilt, "t_ns": now},
            now,
            SENDER_SIM,
        )
        for payload in self._pending_event_payloads:
            self.bus.publish("scenario_events", payload, now, SENDER_SIM)
        self._pending_event_payloads = []

    def _scenario_transitions(self) -> None:
        scen = self.config.scenario
        needs_grasp_check = self.state.arm.gripper < GRIPPER_CLOSED or any(
            a.grasped_by is not None for a in self.state.antennas
        )
        if needs_grasp_check and self.state.antennas:
            for kind, ant_id in update_grasp_state(self.state, self.chain, rover_id=self.sim_id):
                self._log_event(EVT_GRASPED if kind == "grasped" else EVT_RELEASED, {"id": ant_id})
        if not self.state.antennas:
            return
        all_aligned = True
        for ant in self.state.antennas:
            aligned = check_alignment(ant, scen.strict_orientation)
            all_aligned = all_aligned and aligned
            if aligned != self._aligned[ant.id]:
                self._aligned[ant.id] = aligned
                self._log_event(
                    EVT_ALIGNED if aligned else EVT_MISALIGNED,
                    {"id": ant.id, "orientation": ant.orientation},
                )
        if all_aligned and not self._completed_this_attempt:
            self._completed_this_attempt = True
            self._log_event(EVT_COMPLETED, {})

    def tick(self) -> None:
        now = self.state.sim_time

        delivered = self.bus.deliver_due(now, COMMAND_TOPICS)
        for env in delivered:
            self.command_log.append(env)
            self._apply_command(env)
        if delivered:
            # command effects (grasp, release, arm motion) are instantaneous,
            # so alignment transitions are scored at the delivery tick
            self._scenario_transitions()
        self.telemetry.extend(self.bus.deliver_due(now, ("odometry", "joint_states", "gimbal_state", "scenario_events")))

        self._publish_telemetry(now)

        while self._script_pos < len(self._script) and self._script[self._script_pos].t_ns <= now:
            cmd = self._script[self._script_pos]
            self.bus.publish(cmd.topic, cmd.payload, now, SENDER_CONSOLE)
            self._script_pos += 1
        for topic, payload in self._staged:
            self.bus.publish(topic, payload, now, SENDER_CONSOLE)
        self._staged = []

        self.state = step_world(self.state, self._drive, self.params, self.chain)
        self._scenario_transitions()

    def run_ticks(self, n: int) -> None:
        for _ in range(n):
            self.tick()

    def run_script(self, commands: list[TimedCommand], duration_s: float | None = None) -> SessionRun:
        """Run a whole command script headlessly and return the session logs.

        The run lasts until ``duration_s`` of sim time (default: one second
        past the last command). Telemetry still in flight at the end is
        dropped, mirroring a closed transport.
        """
        self.load_script(commands)
        if duration_s is None:
            last = max((c.t_ns for c in commands), default=0)
            duration_s = last / 1e9 + 1.0
        n = int(round(duration_s / TICK_SECONDS))
        self.run_ticks(n)
        return SessionRun(
            telemetry=self.telemetry,
            commands=self.command_log,
            events=self.events,
            final_state=self.state,
            sim_id=self.sim_id,
            seed=self.seed,
        )

    # ------------------------------------------------------------------
    # deterministic checkpointing
    # ------------------------------------------------------------------

    def checkpoint(self):
        """Capture everything needed to rewind the loop mid-run."""
        return (
            snapshot(self.state),
            replace(self._drive),
            self.bus.getstate(),
            self._noise_rng.getstate(),
            self._script_pos,
            len(self.telemetry),
            len(self.command_log),
            len(self.events),
            dict(self._aligned),
            self._completed_this_attempt,
            list(self._pending_event_payloads),
        )

    def restore_checkpoint(self, cp) -> None:
        (
            snap,
            drive,
            bus_state,
            rng_state,
            script_pos,
            n_tel,
            n_cmd,
            n_evt,
            aligned,
            completed,
            pending,
        ) = cp
        self.state = restore(snap)
        self._drive = drive
        self.bus.setstate(bus_state)
        self._noise_rng.setstate(rng_state)
        self._script_pos = script_pos
        del self.telemetry[n_tel:]
        del self.command_log[n_cmd:]
        del self.events[n_evt:]
        self._aligned = dict(aligned)
        self._completed_this_attempt = completed
        self._pending_event_payloads = list(pending)

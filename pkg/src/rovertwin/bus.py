"""Topic-based pub-sub transport with deterministic latency injection.

The bus is owned by the simulation loop: publishers enqueue, and delivery
happens once per tick via deliver_due(). Delays are sampled from a seeded
generator at publish time, so a fixed (seed, publish schedule) pair always
produces the identical delivered_at sequence. Per-topic FIFO order is enforced
even when a later message samples a shorter delay.
"""

from __future__ import annotations

import random
import statistics
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

from .core import LatencyModelConfig

COMMAND_TOPICS = ("drive_cmd", "arm_cmd", "gimbal_cmd", "reset_cmd")
TELEMETRY_TOPICS = ("joint_states", "odometry", "gimbal_state", "scenario_events")
ALL_TOPICS = COMMAND_TOPICS + TELEMETRY_TOPICS

# who may publish on which direction
SENDER_CONSOLE = "console"
SENDER_SIM = "sim"


class TopicError(ValueError):
    """Unknown topic or a publish against the topic's allowed direction."""


@dataclass
class Envelope:
    """A sequenced, timestamped message on one topic.

    ``seq`` increases strictly per topic; ``delivered_at_ns`` is stamped when
    the envelope leaves the bus and is None while in flight.
    """

    topic: str
    seq: int
    sent_at_ns: int
    payload: dict
    delivered_at_ns: int | None = None
    due_ns: int = 0

    @property
    def delay_ns(self) -> int:
        if self.delivered_at_ns is None:
            raise ValueError("envelope not delivered yet")
        return self.delivered_at_ns - self.sent_at_ns

    def to_record(self) -> dict:
        rec = {
            "topic": self.topic,
            "seq": self.seq,
            "sent_at_ns": self.sent_at_ns,
            "payload": self.payload,
        }
        if self.delivered_at_ns is not None:
            rec["delivered_at_ns"] = self.delivered_at_ns
        return rec


@dataclass
class LatencyModel:
    """Fixed base delay plus symmetric uniform jitter, clamped at zero.

    The seed makes the jitter stream reproducible; a zero jitter width draws
    nothing from the generator at all, so latency-free configurations stay
    bitwise identical regardless of seed.
    """

    base_delay_ms: float = 0.0
    jitter_half_width_ms: float = 0.0
    seed: int = 0
    _rng: random.Random = field(init=False, repr=False)

    def __post_init__(self):
        if self.base_delay_ms < 0 or self.jitter_half_width_ms < 0:
            raise ValueError("latency model fields must be >= 0")
        self._rng = random.Random(f"latency:{self.seed}")

    @staticmethod
    def from_config(cfg: LatencyModelConfig) -> "LatencyModel":
        return LatencyModel(
            base_delay_ms=cfg.base_delay_ms,
            jitter_half_width_ms=cfg.jitter_half_width_ms,
            seed=cfg.seed,
        )

    def sample_delay_ns(self) -> int:
        delay_ms = self.base_delay_ms
        if self.jitter_half_width_ms > 0.0:
            delay_ms += self._rng.uniform(-self.jitter_half_width_ms, self.jitter_half_width_ms)
        return max(0, int(round(delay_ms * 1e6)))

    def getstate(self):
        return self._rng.getstate()

    def setstate(self, state) -> None:
        self._rng.setstate(state)


_TOPIC_DIRECTION = {t: SENDER_CONSOLE for t in COMMAND_TOPICS}
_TOPIC_DIRECTION.update({t: SENDER_SIM for t in TELEMETRY_TOPICS})


class MessageBus:
    """In-process delay queue connecting the console side to the sim side."""

    def __init__(self, command_latency: LatencyModel | None = None, telemetry_latency: LatencyModel | None = None):
        self.command_latency = command_latency or LatencyModel()
        self.telemetry_latency = telemetry_latency or LatencyModel()
        self._queues: dict[str, deque[Envelope]] = {t: deque() for t in ALL_TOPICS}
        self._seq: dict[str, int] = {t: 0 for t in ALL_TOPICS}

    def publish(self, topic: str, payload: dict, now_ns: int, sender: str) -> Envelope:
        """Enqueue a message; stamps the next per-topic seq and samples its delay."""
        if topic not in _TOPIC_DIRECTION:
            raise TopicError(f"unknown topic {topic!r}")
        if _TOPIC_DIRECTION[topic] != sender:
            raise TopicError(
                f"{sender!r} may not publish on {topic!r}: "
                f"{'commands flow console->sim' if topic in COMMAND_TOPICS else 'telemetry flows sim->console'}"
            )
        model = self.command_latency if topic in COMMAND_TOPICS else self.telemetry_latency
        self._seq[topic] += 1
        # a zero sampled delay still lands strictly after the send instant,
        # so delivery happens on the next tick's pass at the earliest
        env = Envelope(
            topic=topic,
            seq=self._seq[topic],
            sent_at_ns=now_ns,
            payload=payload,
            due_ns=now_ns + max(model.sample_delay_ns(), 1),
        )
        self._queues[topic].append(env)
        return env

    def deliver_due(self, now_ns: int, topics: Iterable[str] = ALL_TOPICS) -> list[Envelope]:
        """Release every envelope whose delay has elapsed, in per-topic FIFO order.

        A message whose sampled delay would overtake an earlier message on the
        same topic waits for it: the head of each queue gates delivery.
        """
        out: list[Envelope] = []
        for topic in topics:
            q = self._queues[topic]
            while q and q[0].due_ns <= now_ns:
                env = q.popleft()
                env.delivered_at_ns = now_ns
                out.append(env)
        return out

    def pending_count(self) -> int:
        return sum(len(q) for q in self._queues.values())

    def getstate(self):
        """Checkpoint: queues, seq counters, and both jitter generators."""
        return (
            {t: [(_env_tuple(e)) for e in q] for t, q in self._queues.items()},
            dict(self._seq),
            self.command_latency.getstate(),
            self.telemetry_latency.getstate(),
        )

    def setstate(self, state) -> None:
        queues, seqs, cmd_rng, tel_rng = state
        self._queues = {
            t: deque(Envelope(topic=e[0], seq=e[1], sent_at_ns=e[2], payload=dict(e[3]), due_ns=e[4]) for e in q)
            for t, q in queues.items()
        }
        self._seq = dict(seqs)
        self.command_latency.setstate(cmd_rng)
        self.telemetry_latency.setstate(tel_rng)


def _env_tuple(e: Envelope):
    return (e.topic, e.seq, e.sent_at_ns, dict(e.payload), e.due_ns)


@dataclass(frozen=True)
class LatencyStats:
    median_ms: float
    p95_ms: float
    mean_ms: float


def measure_latency(log: list[Envelope]) -> LatencyStats:
    """Median / p95 / mean of delivered-minus-sent over a delivered envelope log."""
    delays = [e.delay_ns / 1e6 for e in log if e.delivered_at_ns is not None]
    if not delays:
        raise ValueError("empty log: no delivered envelopes to measure")
    ordered = sorted(delays)
    rank = max(0, -(-len(ordered) * 95 // 100) - 1)  # nearest-rank p95
    return LatencyStats(
        median_ms=statistics.median(ordered),
        p95_ms=ordered[rank],
        mean_ms=statistics.fmean(ordered),
    )

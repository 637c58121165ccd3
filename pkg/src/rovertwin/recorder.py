"""Session recording, deterministic replay, and log persistence.

Sessions are line-delimited JSON: one header line, then one record per line
(command envelope, telemetry envelope, or scenario event) in time order.
Line-delimited text keeps appends crash-tolerant: a truncated final line is
dropped on read and everything before it stays usable.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
from dataclasses import dataclass, field
from typing import IO, Iterable

from .bus import Envelope
from .core import TICK_NS, TwinConfig
from .scenario import SessionEvent
from .simloop import SessionRun, Simulator, TimedCommand

LOG_VERSION = 1


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(config_text: str) -> str:
    return hashlib.sha256(config_text.encode("utf-8")).hexdigest()


def telemetry_hash(telemetry: Iterable[Envelope]) -> str:
    """Order-sensitive digest of a delivered telemetry stream."""
    h = hashlib.sha256()
    for env in telemetry:
        h.update(canonical_json(env.to_record()).encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


class ConfigMismatch(ValueError):
    """Replay attempted with a configuration that differs from the recorded one."""


@dataclass
class SessionLog:
    header: dict
    commands: list[Envelope] = field(default_factory=list)
    telemetry: list[Envelope] = field(default_factory=list)
    events: list[SessionEvent] = field(default_factory=list)


def _env_from_record(rec: dict) -> Envelope:
    return Envelope(
        topic=rec["topic"],
        seq=rec["seq"],
        sent_at_ns=rec["sent_at_ns"],
        payload=rec["payload"],
        delivered_at_ns=rec.get("delivered_at_ns"),
    )


def _records(run: SessionRun) -> list[dict]:
    recs = []
    for env in run.commands:
        recs.append({"rec": "cmd", **env.to_record()})
    for env in run.telemetry:
        recs.append({"rec": "tel", **env.to_record()})
    for evt in run.events:
        recs.append({"rec": "event", **evt.to_record()})
    # stable time order: delivery time for envelopes, event time for events
    recs.sort(key=lambda r: (r.get("delivered_at_ns", r.get("t_ns", 0)), r["rec"]))
    return recs


def make_header(config: TwinConfig, run: SessionRun, profile_text: str | None = None) -> dict:
    header = {
        "version": LOG_VERSION,
        "kind": "rovertwin-session",
        "config_sha256": config_hash(config.source_text),
        "seed": run.seed,
        "sim_id": run.sim_id,
        "scenario_id": config.scenario.id,
        "dt_ns": TICK_NS,
        "duration_ns": run.final_state.sim_time,
        "created_at": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    if profile_text is not None:
        header["profile_sha256"] = config_hash(profile_text)
    return header


def write_session(path: str, run: SessionRun, config: TwinConfig, profile_text: str | None = None) -> dict:
    header = make_header(config, run, profile_text)
    with open(path, "w", encoding="utf-8") as f:
        f.write(canonical_json(header) + "\n")
        for rec in _records(run):
            f.write(canonical_json(rec) + "\n")
    return header


def read_session(path: str) -> SessionLog:
    """Load a session log, tolerating a torn final line."""
    log: SessionLog | None = None
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.endswith("\n"):
                break  # torn tail from an interrupted write
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                break
            if log is None:
                if rec.get("kind") != "rovertwin-session":
                    raise ValueError(f"{path} is not a session log")
                log = SessionLog(header=rec)
                continue
            kind = rec.get("rec")
            if kind == "cmd":
                log.commands.append(_env_from_record(rec))
            elif kind == "tel":
                log.telemetry.append(_env_from_record(rec))
            elif kind == "event":
                log.events.append(SessionEvent.from_record(rec))
    if log is None:
        raise ValueError(f"{path} has no readable header line")
    return log


class SessionRecorder:
    """Streaming writer for live serve mode: append-only, flushed once per sim second."""

    def __init__(self, fh: IO[str], header: dict):
        self._fh = fh
        self._last_flush_ns = 0
        self._fh.write(canonical_json(header) + "\n")
        self._fh.flush()

    def append(self, rec: dict, now_ns: int) -> None:
        self._fh.write(canonical_json(rec) + "\n")
        if now_ns - self._last_flush_ns >= 1_000_000_000:
            self._fh.flush()
            self._last_flush_ns = now_ns

    def close(self) -> None:
        self._fh.flush()
        self._fh.close()


def script_from_log(log: SessionLog) -> list[TimedCommand]:
    """Rebuild the command script from recorded envelopes (publish order preserved)."""
    cmds = sorted(log.commands, key=lambda e: (e.sent_at_ns, e.topic, e.seq))
    return [TimedCommand(t_ns=e.sent_at_ns, topic=e.topic, payload=e.payload) for e in cmds]


def replay(log: SessionLog, config: TwinConfig, profile=None) -> SessionRun:
    """Re-run a recorded session; output telemetry is byte-identical to the recording.

    Refuses to run when the supplied config (or emulator profile) does not
    hash-match the header: replaying against different physics would silently
    produce a diverging session.
    """
    if config_hash(config.source_text) != log.header["config_sha256"]:
        raise ConfigMismatch("config does not match the recorded session")
    sim = Simulator(
        config,
        profile=profile,
        seed=log.header["seed"],
        sim_id=log.header.get("sim_id", "twin"),
    )
    duration_s = log.header["duration_ns"] / 1e9
    return sim.run_script(script_from_log(log), duration_s=duration_s)

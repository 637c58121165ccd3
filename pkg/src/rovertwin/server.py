"""Socket serving for the live twin: WebSocket for the console, TCP for tools.

Two listeners share one simulation loop:

* a WebSocket endpoint (default port 8790, env TWIN_PORT) carrying one JSON
  record per text frame, for the browser operator console;
* a plain TCP endpoint (WebSocket port + 1) carrying the same records
  newline-delimited, for scripts and the calibration client.

Incoming client records are commands ``{"topic": ..., "payload": {...}}``;
outgoing records are ``{"rec": "tel", ...}`` envelope dumps. The TCP side
additionally accepts a lockstep control record ``{"ctrl": "run_script", ...}``
that executes a command script on a fresh deterministic simulator and streams
the resulting session back; this is how a separate-process emulator serves
calibration without giving up reproducibility.
"""

from __future__ import annotations

import asyncio
import json
import logging
from dataclasses import dataclass

from websockets.asyncio.server import serve as ws_serve

from .bus import COMMAND_TOPICS, TELEMETRY_TOPICS, TopicError
from .core import TICK_NS, TICK_SECONDS, TwinConfig
from .emulator import PerturbationProfile
from .recorder import SessionRecorder, canonical_json, config_hash, make_header
from .simloop import SessionRun, Simulator, TimedCommand

log = logging.getLogger("rovertwin.server")

DEFAULT_PORT = 8790


def _hello(config: TwinConfig, sim: Simulator) -> dict:
    return {
        "rec": "hello",
        "kind": "rovertwin",
        "dt_ns": TICK_NS,
        "command_topics": list(COMMAND_TOPICS),
        "telemetry_topics": list(TELEMETRY_TOPICS),
        "scenario_id": config.scenario.id,
        "config_sha256": config_hash(config.source_text),
        "chain": {
            "mount": list(config.chain.mount),
            "gripper_offset": list(config.chain.gripper_offset),
            "links": [
                {
                    "offset": list(l.offset),
                    "axis": list(l.axis),
                    "min": l.joint_min,
                    "max": l.joint_max,
                }
                for l in config.chain.links
            ],
        },
        "wheel_base": config.physics.wheel_base,
        "antennas": [
            {
                "id": a.id,
                "x": a.pose.x,
                "y": a.pose.y,
                "orientation": a.orientation,
                "target_orientation": a.target_orientation,
                "tolerance": a.tolerance,
            }
            for a in sim.state.antennas
        ],
    }


@dataclass(eq=False)
class _Client:
    queue: asyncio.Queue


class TwinServer:
    """Real-time simulation loop plus the two socket listeners."""

    def __init__(
        self,
        config: TwinConfig,
        *,
        seed: int = 0,
        profile: PerturbationProfile | None = None,
        port: int = DEFAULT_PORT,
        tcp_port: int | None = None,
        record_path: str | None = None,
        sim_id: str = "twin",
    ):
        self.config = config
        self.seed = seed
        self.profile = profile
        self.port = port
        self.tcp_port = tcp_port if tcp_port is not None else port + 1
        self.sim = Simulator(config, profile=profile, seed=seed, sim_id=sim_id)
        self._clients: set[_Client] = set()
        self._stop = asyncio.Event()
        self._recorder: SessionRecorder | None = None
        self._record_path = record_path
        self._delivered = 0
        self.started = asyncio.Event()
        self.bound_ws_port: int | None = None
        self.bound_tcp_port: int | None = None

    # ------------------------------------------------------------------

    def request_stop(self) -> None:
        self._stop.set()

    def _broadcast(self, text: str) -> None:
        for client in self._clients:
            try:
                client.queue.put_nowait(text)
            except asyncio.QueueFull:
                pass  # slow client: drop rather than stall the loop

    async def _tick_loop(self) -> None:
        loop = asyncio.get_running_loop()
        next_at = loop.time()
        while not self._stop.is_set():
            before = len(self.sim.telemetry)
            self.sim.tick()
            for env in self.sim.telemetry[before:]:
                rec = {"rec": "tel", **env.to_record()}
                text = canonical_json(rec)
                self._broadcast(text)
                if self._recorder:
                    self._recorder.append(rec, self.sim.state.sim_time)
            if self._recorder:
                for env in self.sim.command_log[self._delivered :]:
                    self._recorder.append({"rec": "cmd", **env.to_record()}, self.sim.state.sim_time)
                self._delivered = len(self.sim.command_log)
            next_at += TICK_SECONDS
            delay = next_at - loop.time()
            if delay > 0:
                await asyncio.sleep(delay)
            else:
                next_at = loop.time()  # fell behind: don't try to catch up

    def _handle_command(self, rec: dict) -> dict | None:
        topic = rec.get("topic")
        if topic not in COMMAND_TOPICS:
            return {"rec": "error", "message": f"unknown or non-command topic {topic!r}"}
        payload = rec.get("payload") or {}
        self.sim.submit(topic, payload)
        return None

    # ------------------------------------------------------------------
    # WebSocket side
    # ------------------------------------------------------------------

    async def _ws_handler(self, connection) -> None:
        client = _Client(queue=asyncio.Queue(maxsize=4096))
        self._clients.add(client)
        await connection.send(canonical_json(_hello(self.config, self.sim)))

        async def sender():
            while True:
                await connection.send(await client.queue.get())

        send_task = asyncio.create_task(sender())
        try:
            async for message in connection:
                try:
                    rec = json.loads(message)
                except json.JSONDecodeError:
                    await connection.send(canonical_json({"rec": "error", "message": "not JSON"}))
                    continue
                err = self._handle_command(rec)
                if err:
                    await connection.send(canonical_json(err))
        finally:
            send_task.cancel()
            self._clients.discard(client)

    # ------------------------------------------------------------------
    # TCP side
    # ------------------------------------------------------------------

    async def _run_script_ctrl(self, rec: dict, writer: asyncio.StreamWriter) -> None:
        commands = [
            TimedCommand(t_ns=int(c["t_ns"]), topic=c["topic"], payload=c["payload"])
            for c in rec.get("commands", [])
        ]
        seed = int(rec.get("seed", self.seed))
        duration = rec.get("duration_s")
        sim = Simulator(self.config, profile=self.profile, seed=seed, sim_id=self.sim.sim_id)
        run = sim.run_script(commands, duration_s=duration)
        for env in run.commands:
            writer.write((canonical_json({"rec": "cmd", **env.to_record()}) + "\n").encode())
        for env in run.telemetry:
            writer.write((canonical_json({"rec": "tel", **env.to_record()}) + "\n").encode())
        for evt in run.events:
            writer.write((canonical_json({"rec": "event", **evt.to_record()}) + "\n").encode())
        writer.write((canonical_json({"ctrl": "done", "duration_ns": run.final_state.sim_time}) + "\n").encode())
        await writer.drain()

    async def _tcp_handler(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        client = _Client(queue=asyncio.Queue(maxsize=4096))
        writer.write((canonical_json(_hello(self.config, self.sim)) + "\n").encode())

        async def sender():
            while True:
                writer.write(((await client.queue.get()) + "\n").encode())
                await writer.drain()

        send_task: asyncio.Task | None = None
        try:
            while True:
                line = await reader.readline()
                if not line:
                    break
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    writer.write((canonical_json({"rec": "error", "message": "not JSON"}) + "\n").encode())
                    continue
                if rec.get("ctrl") == "run_script":
                    await self._run_script_ctrl(rec, writer)
                elif rec.get("ctrl") == "subscribe":
                    if send_task is None:
                        self._clients.add(client)
                        send_task = asyncio.create_task(sender())
                else:
                    err = self._handle_command(rec)
                    if err:
                        writer.write((canonical_json(err) + "\n").encode())
                        await writer.drain()
        except (ConnectionResetError, BrokenPipeError):
            pass
        finally:
            if send_task:
                send_task.cancel()
            self._clients.discard(client)
            writer.close()

    # ------------------------------------------------------------------

    async def run(self) -> None:
        if self._record_path:
            run_stub = SessionRun(
                telemetry=[], commands=[], events=[], final_state=self.sim.state,
                sim_id=self.sim.sim_id, seed=self.seed,
            )
            header = make_header(self.config, run_stub)
            self._recorder = SessionRecorder(open(self._record_path, "w", encoding="utf-8"), header)
        tcp_server = await asyncio.start_server(self._tcp_handler, host="0.0.0.0", port=self.tcp_port)
        self.bound_tcp_port = tcp_server.sockets[0].getsockname()[1]
        async with ws_serve(self._ws_handler, host="0.0.0.0", port=self.port) as ws_server:
            self.bound_ws_port = ws_server.sockets[0].getsockname()[1]
            log.info("twin listening: ws=%d tcp=%d", self.bound_ws_port, self.bound_tcp_port)
            print(f"listening ws={self.bound_ws_port} tcp={self.bound_tcp_port}", flush=True)
            self.started.set()
            tick_task = asyncio.create_task(self._tick_loop())
            await self._stop.wait()
            tick_task.cancel()
        tcp_server.close()
        await tcp_server.wait_closed()
        if self._recorder:
            self._recorder.close()


def run_remote_script(
    host: str, port: int, commands: list[TimedCommand], duration_s: float | None, seed: int
) -> SessionRun:
    """Blocking client for the lockstep run_script control record."""
    import socket

    from .bus import Envelope
    from .scenario import SessionEvent

    with socket.create_connection((host, port), timeout=30.0) as sock:
        rfile = sock.makefile("r", encoding="utf-8")
        hello = json.loads(rfile.readline())
        if hello.get("kind") != "rovertwin":
            raise ConnectionError("endpoint is not a rovertwin server")
        req = {
            "ctrl": "run_script",
            "seed": seed,
            "duration_s": duration_s,
            "commands": [{"t_ns": c.t_ns, "topic": c.topic, "payload": c.payload} for c in commands],
        }
        sock.sendall((canonical_json(req) + "\n").encode())
        telemetry, command_log, events = [], [], []
        duration_ns = 0
        while True:
            line = rfile.readline()
            if not line:
                raise ConnectionError("endpoint closed before the run finished")
            rec = json.loads(line)
            if rec.get("ctrl") == "done":
                duration_ns = rec["duration_ns"]
                break
            kind = rec.get("rec")
            if kind in ("tel", "cmd"):
                env = Envelope(
                    topic=rec["topic"],
                    seq=rec["seq"],
                    sent_at_ns=rec["sent_at_ns"],
                    payload=rec["payload"],
                    delivered_at_ns=rec.get("delivered_at_ns"),
                )
                (telemetry if kind == "tel" else command_log).append(env)
            elif kind == "event":
                events.append(SessionEvent.from_record(rec))
    from .core import TwinState

    final = TwinState()
    final.sim_time = duration_ns
    return SessionRun(
        telemetry=telemetry, commands=command_log, events=events,
        final_state=final, sim_id="remote", seed=seed,
    )

import asyncio
import json
import math

import pytest
import websockets

from rovertwin.core import load_config, merge_config_documents
from rovertwin.emulator import load_profile_file
from rovertwin.server import TwinServer, run_remote_script
from rovertwin.simloop import TimedCommand
from tests.conftest import read_config_text


def antenna_config():
    return load_config(
        merge_config_documents(read_config_text(), read_config_text("scenario_antenna.yaml"))
    )


async def _with_server(config, body, **kwargs):
    server = TwinServer(config, port=0, tcp_port=0, **kwargs)
    task = asyncio.create_task(server.run())
    await asyncio.wait_for(server.started.wait(), timeout=10)
    try:
        await body(server)
    finally:
        server.request_stop()
        await asyncio.wait_for(task, timeout=10)


def test_websocket_hello_and_telemetry():
    async def body(server):
        uri = f"ws://127.0.0.1:{server.bound_ws_port}"
        async with websockets.connect(uri) as ws:
            hello = json.loads(await ws.recv())
            assert hello["rec"] == "hello"
            assert hello["dt_ns"] == 10_000_000
            assert "drive_cmd" in hello["command_topics"]
            assert len(hello["chain"]["links"]) == 6

            started = asyncio.get_event_loop().time()
            seen = {}
            while len(seen) < 3 and asyncio.get_event_loop().time() - started < 10:
                rec = json.loads(await ws.recv())
                if rec.get("rec") == "tel":
                    seen[rec["topic"]] = rec
            assert {"odometry", "joint_states", "gimbal_state"} <= set(seen)

    asyncio.run(_with_server(antenna_config(), body))


def test_websocket_drive_command_moves_rover():
    async def body(server):
        uri = f"ws://127.0.0.1:{server.bound_ws_port}"
        async with websockets.connect(uri) as ws:
            await ws.recv()  # hello
            await ws.send(json.dumps({"topic": "drive_cmd", "payload": {"v_left": 0.5, "v_right": 0.5}}))
            deadline = asyncio.get_event_loop().time() + 15
            moved = False
            while asyncio.get_event_loop().time() < deadline:
                rec = json.loads(await ws.recv())
                if rec.get("rec") == "tel" and rec["topic"] == "odometry" and rec["payload"]["x"] > 0:
                    moved = True
                    break
            assert moved

    asyncio.run(_with_server(antenna_config(), body))


def test_websocket_rejects_non_command_topic():
    async def body(server):
        uri = f"ws://127.0.0.1:{server.bound_ws_port}"
        async with websockets.connect(uri) as ws:
            await ws.recv()
            await ws.send(json.dumps({"topic": "odometry", "payload": {}}))
            while True:
                rec = json.loads(await ws.recv())
                if rec.get("rec") == "error":
                    assert "odometry" in rec["message"]
                    break

    asyncio.run(_with_server(antenna_config(), body))


def test_tcp_subscribe_streams_telemetry():
    async def body(server):
        reader, writer = await asyncio.open_connection("127.0.0.1", server.bound_tcp_port)
        hello = json.loads(await reader.readline())
        assert hello["rec"] == "hello"
        writer.write(b'{"ctrl": "subscribe"}\n')
        await writer.drain()
        got = None
        for _ in range(200):
            rec = json.loads(await asyncio.wait_for(reader.readline(), timeout=10))
            if rec.get("rec") == "tel":
                got = rec
                break
        assert got is not None and "seq" in got
        writer.close()

    asyncio.run(_with_server(antenna_config(), body))


def test_remote_run_script_matches_local(config_dir):
    cfg = antenna_config()
    profile = load_profile_file(config_dir / "emulator_test_profile.yaml")
    script = [
        TimedCommand(0, "drive_cmd", {"v_left": 0.4, "v_right": 0.4}),
        TimedCommand(1_000_000_000, "drive_cmd", {"v_left": 0.0, "v_right": 0.0}),
    ]

    remote_result = {}

    async def body(server):
        loop = asyncio.get_running_loop()
        run = await loop.run_in_executor(
            None,
            lambda: run_remote_script("127.0.0.1", server.bound_tcp_port, script, 3.0, 77),
        )
        remote_result["run"] = run

    asyncio.run(_with_server(cfg, body, profile=profile, sim_id="emulator"))

    from rovertwin.recorder import telemetry_hash
    from rovertwin.simloop import Simulator

    local = Simulator(cfg, profile=profile, seed=77, sim_id="emulator").run_script(script, duration_s=3.0)
    remote = remote_result["run"]
    assert telemetry_hash(remote.telemetry) == telemetry_hash(local.telemetry)
    assert len(remote.commands) == len(local.commands)
    assert remote.final_state.sim_time == local.final_state.sim_time

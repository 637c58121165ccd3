"""Command-line entry points: serve, calibrate, run, replay.

Exit codes: 0 success, 2 configuration error, 3 connection error,
4 tolerance failure, 5 non-convergence.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import math
import os
import signal
import sys
from pathlib import Path

from .core import ConfigError, TwinConfig, load_config, merge_config_documents
from .emulator import PerturbationProfile, load_profile_file
from .fidelity import calibrate as run_calibration
from .recorder import ConfigMismatch, read_session, replay, telemetry_hash, write_session
from .routines import antenna_solution, load_script, standard_calibration_routine
from .scenario import evaluate_session
from .server import DEFAULT_PORT, TwinServer, run_remote_script
from .simloop import Simulator

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONNECTION = 3
EXIT_TOLERANCE = 4
EXIT_NO_CONVERGENCE = 5


def _resolve_config_path(value: str) -> Path:
    p = Path(value)
    if p.exists():
        return p
    candidate = Path("configs") / f"{value}.yaml"
    if candidate.exists():
        return candidate
    raise ConfigError("--config", f"no such config file or name: {value}")


def _load_effective_config(args) -> TwinConfig:
    text = _resolve_config_path(args.config).read_text(encoding="utf-8")
    if getattr(args, "scenario", None):
        scenario_text = _resolve_config_path(args.scenario).read_text(encoding="utf-8")
        text = merge_config_documents(text, scenario_text)
    return load_config(text)


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("TWIN_SEED")
    return int(env) if env else 0


def _port(args) -> int:
    if args.port is not None:
        return args.port
    env = os.environ.get("TWIN_PORT")
    return int(env) if env else DEFAULT_PORT


def _profile(args) -> PerturbationProfile | None:
    if getattr(args, "profile", None):
        return load_profile_file(args.profile)
    return None


# ---------------------------------------------------------------------------
# serve
# ---------------------------------------------------------------------------


def cmd_serve(args) -> int:
    config = _load_effective_config(args)
    seed = _seed(args)
    profile = _profile(args)

    if args.headless:
        if not args.script:
            print("serve --headless requires --script", file=sys.stderr)
            return EXIT_CONFIG
        commands = load_script(args.script)
        sim = Simulator(config, profile=profile, seed=seed, sim_id="emulator" if profile else "twin")
        run = sim.run_script(commands, duration_s=args.duration)
        if args.out:
            write_session(args.out, run, config)
        print(
            json.dumps(
                {
                    "telemetry_records": len(run.telemetry),
                    "command_records": len(run.commands),
                    "telemetry_sha256": telemetry_hash(run.telemetry),
                    "final_pose": {
                        "x": run.final_state.rover.x,
                        "y": run.final_state.rover.y,
                        "heading": run.final_state.rover.heading,
                    },
                    "sim_time_s": run.final_state.sim_time / 1e9,
                },
                indent=2,
            )
        )
        return EXIT_OK

    server = TwinServer(
        config,
        seed=seed,
        profile=profile,
        port=_port(args),
        tcp_port=args.tcp_port,
        record_path=args.out,
        sim_id="emulator" if profile else "twin",
    )

    async def main() -> None:
        loop = asyncio.get_running_loop()
        for sig in (signal.SIGINT, signal.SIGTERM):
            loop.add_signal_handler(sig, server.request_stop)
        await server.run()

    try:
        asyncio.run(main())
    except OSError as e:
        print(f"cannot bind sockets: {e}", file=sys.stderr)
        return EXIT_CONNECTION
    return EXIT_OK


# ---------------------------------------------------------------------------
# calibrate
# ---------------------------------------------------------------------------


def cmd_calibrate(args) -> int:
    config = _load_effective_config(args)
    seed = _seed(args)
    routine = standard_calibration_routine(config)

    if args.endpoint:
        host, _, port = args.endpoint.partition(":")
        try:
            physical = run_remote_script(
                host, int(port or DEFAULT_PORT + 1), routine.commands, routine.duration_s, seed
            )
        except (ConnectionError, OSError) as e:
            print(f"emulator endpoint unreachable: {e}", file=sys.stderr)
            return EXIT_CONNECTION
    elif args.profile:
        profile = load_profile_file(args.profile)
        sim = Simulator(config, profile=profile, seed=seed, sim_id="emulator")
        physical = sim.run_script(routine.commands, duration_s=routine.duration_s)
    else:
        print("calibrate requires --profile or --endpoint", file=sys.stderr)
        return EXIT_CONFIG

    result = run_calibration(physical, config, routine, seed=seed)
    doc = result.to_document()

    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "calibration.json").write_text(json.dumps(doc, indent=2), encoding="utf-8")

    deg = math.degrees
    print(f"latency injected (ms): cmd={result.injected_latency_command_ms:.1f} tel={result.injected_latency_telemetry_ms:.1f}")
    print(f"joint bias fit (deg): {[round(deg(b), 4) for b in result.joint_bias_fit]}")
    print(f"joint noise fit (deg): {deg(result.joint_noise_fit):.4f}")
    print(f"quant step fit (deg): {deg(result.quant_step_fit):.4f}")
    print(f"torque scale fit: {result.torque_scale_fit:.4f}")
    print(f"residual driving error: {result.residuals.driving.error_pct:.3f}%")
    print(f"converged: {result.converged}  within tolerance: {result.within_tolerance}")

    if not result.converged:
        return EXIT_NO_CONVERGENCE
    if not result.within_tolerance:
        return EXIT_TOLERANCE
    return EXIT_OK


# ---------------------------------------------------------------------------
# run (headless scenario)
# ---------------------------------------------------------------------------


def cmd_run(args) -> int:
    config = _load_effective_config(args)
    if not config.scenario.antennas:
        print("scenario has no antennas; nothing to run", file=sys.stderr)
        return EXIT_CONFIG
    seed = _seed(args)
    commands = antenna_solution(config) if args.solve else load_script(args.script)
    duration = args.duration
    if duration is None:
        duration = max(c.t_ns for c in commands) / 1e9 + 2.0 if commands else (config.scenario.time_limit or 60.0)
        if config.scenario.time_limit is not None:
            duration = min(duration, config.scenario.time_limit)

    sim = Simulator(config, seed=seed)
    run = sim.run_script(commands, duration_s=duration)
    metrics = evaluate_session(run.events, config.scenario.attempts_allowed)
    if args.out:
        write_session(args.out, run, config)
    print(
        json.dumps(
            {
                "scenario": config.scenario.id,
                "time_to_completion_s": metrics.time_to_completion,
                "reset_count": metrics.reset_count,
                "successes": metrics.successes,
                "attempts": metrics.attempts,
                "success_rate": metrics.success_rate,
            },
            indent=2,
        )
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# replay
# ---------------------------------------------------------------------------


def cmd_replay(args) -> int:
    config = _load_effective_config(args)
    log = read_session(args.log)
    try:
        rerun = replay(log, config, profile=_profile(args))
    except ConfigMismatch as e:
        print(f"config mismatch: {e}", file=sys.stderr)
        return EXIT_CONFIG
    recorded = telemetry_hash(log.telemetry)
    replayed = telemetry_hash(rerun.telemetry)
    match = recorded == replayed
    print(json.dumps({"recorded_sha256": recorded, "replayed_sha256": replayed, "match": match}, indent=2))
    return EXIT_OK if match else EXIT_TOLERANCE


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rovertwin", description="rover digital twin tools")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default="default", help="config file or name under configs/")
        p.add_argument("--scenario", help="scenario file merged over the config")
        p.add_argument("--seed", type=int, default=None, help="simulation seed (env TWIN_SEED)")

    p = sub.add_parser("serve", help="run the live twin (or emulator with --profile)")
    common(p)
    p.add_argument("--profile", help="perturbation profile: serve the physical-rover emulator")
    p.add_argument("--port", type=int, default=None, help="WebSocket port (env TWIN_PORT, default 8790)")
    p.add_argument("--tcp-port", type=int, default=None, help="TCP NDJSON port (default port+1)")
    p.add_argument("--out", help="record the session to this file")
    p.add_argument("--headless", action="store_true", help="no sockets: run --script and exit")
    p.add_argument("--script", help="command script (JSONL) for --headless")
    p.add_argument("--duration", type=float, default=None, help="headless run length, seconds")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("calibrate", help="fit twin corrections against the emulator")
    common(p)
    p.add_argument("--profile", help="emulator profile file (in-process run)")
    p.add_argument("--endpoint", help="host:port of a served emulator (TCP port)")
    p.add_argument("--out", help="directory for calibration.json")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("run", help="run a scenario headlessly and print session metrics")
    common(p)
    p.add_argument("--script", help="command script (JSONL)")
    p.add_argument("--solve", action="store_true", help="use the generated antenna solution script")
    p.add_argument("--duration", type=float, default=None)
    p.add_argument("--out", help="write the session log here")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("replay", help="re-run a recorded session and compare telemetry hashes")
    common(p)
    p.add_argument("--log", required=True, help="session log file")
    p.add_argument("--profile", help="perturbation profile if the session was an emulator run")
    p.set_defaults(func=cmd_replay)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as e:
        print(f"file not found: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Solve the single-antenna scenario headlessly and print the session metrics."""

import json
import math
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from rovertwin.core import load_config, merge_config_documents
from rovertwin.routines import antenna_solution
from rovertwin.scenario import evaluate_session
from rovertwin.simloop import Simulator


def main() -> None:
    base = (ROOT / "configs" / "default.yaml").read_text(encoding="utf-8")
    scenario = (ROOT / "configs" / "scenario_antenna.yaml").read_text(encoding="utf-8")
    cfg = load_config(merge_config_documents(base, scenario))

    script = antenna_solution(cfg)
    run = Simulator(cfg, seed=0).run_script(script, duration_s=max(c.t_ns for c in script) / 1e9 + 2.0)
    metrics = evaluate_session(run.events, cfg.scenario.attempts_allowed)

    ant = run.final_state.antennas[0]
    err = abs(math.fmod(ant.orientation - ant.target_orientation + math.pi / 2, math.pi) - math.pi / 2)
    print(json.dumps(
        {
            "success_rate": metrics.success_rate,
            "time_to_completion_s": metrics.time_to_completion,
            "reset_count": metrics.reset_count,
            "final_orientation_deg": math.degrees(ant.orientation),
            "target_orientation_deg": math.degrees(ant.target_orientation),
            "dipole_error_deg": math.degrees(err),
        },
        indent=2,
    ))


if __name__ == "__main__":
    main()

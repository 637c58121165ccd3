#!/usr/bin/env python3
"""Regenerate the shipped command logs under configs/.

The calibration routine and the antenna solution are derived from the default
configuration; rerun this after changing the arm chain, physics, or scenario.
"""

import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from rovertwin.core import load_config, merge_config_documents
from rovertwin.routines import antenna_solution, standard_calibration_routine, write_script


def main() -> None:
    base = (ROOT / "configs" / "default.yaml").read_text(encoding="utf-8")
    scenario = (ROOT / "configs" / "scenario_antenna.yaml").read_text(encoding="utf-8")

    cfg = load_config(base)
    routine = standard_calibration_routine(cfg)
    out = ROOT / "configs" / "calibration_routine.jsonl"
    write_script(out, routine.commands)
    print(f"wrote {out} ({len(routine.commands)} commands, {routine.duration_s:.0f}s)")

    antenna_cfg = load_config(merge_config_documents(base, scenario))
    solution = antenna_solution(antenna_cfg)
    out = ROOT / "configs" / "antenna_solution.jsonl"
    write_script(out, solution)
    print(f"wrote {out} ({len(solution)} commands)")


if __name__ == "__main__":
    main()

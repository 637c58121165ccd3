#!/usr/bin/env python3
"""End-to-end calibration demo.

Runs the documented test profile through the emulator, fits twin corrections,
and prints recovery quality against the hidden ground truth.
"""

import math
import sys
import time
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from rovertwin.core import load_config
from rovertwin.emulator import load_profile_file
from rovertwin.fidelity import calibrate
from rovertwin.routines import standard_calibration_routine
from rovertwin.simloop import Simulator


def main() -> None:
    cfg = load_config((ROOT / "configs" / "default.yaml").read_text(encoding="utf-8"))
    profile = load_profile_file(ROOT / "configs" / "emulator_test_profile.yaml")
    routine = standard_calibration_routine(cfg)

    t0 = time.time()
    physical = Simulator(cfg, profile=profile, seed=42, sim_id="emulator").run_script(
        routine.commands, duration_s=routine.duration_s
    )
    result = calibrate(physical, cfg, routine, seed=42)
    wall = time.time() - t0

    deg = math.degrees
    print(f"calibration finished in {wall:.1f}s wall ({routine.duration_s:.0f}s sim per run)")
    print()
    print(f"{'parameter':<28}{'truth':>12}{'fitted':>14}")
    print(f"{'latency cmd (ms)':<28}{120.0:>12.1f}{result.injected_latency_command_ms:>14.1f}")
    print(f"{'latency tel (ms)':<28}{120.0:>12.1f}{result.injected_latency_telemetry_ms:>14.1f}")
    print(f"{'bias joint 3 (deg)':<28}{0.5:>12.3f}{deg(result.joint_bias_fit[3]):>14.4f}")
    print(f"{'noise sigma (deg)':<28}{0.2:>12.3f}{deg(result.joint_noise_fit):>14.4f}")
    print(f"{'quant step (deg)':<28}{0.0888:>12.4f}{deg(result.quant_step_fit):>14.4f}")
    print(f"{'torque scale':<28}{0.8:>12.3f}{result.torque_scale_fit:>14.4f}")
    print()
    print("residuals after applying the fit to the twin:")
    print(f"  latency delta:  {result.residuals.latency_command_delta_ms:.2f} ms")
    print(f"  joint error:    {deg(result.residuals.joint_error_delta_max):.5f} deg max")
    print(f"  resolution:     {deg(result.residuals.resolution_delta):.6f} deg delta")
    print(f"  driving error:  {result.residuals.driving.error_pct:.4f} %")
    print(f"  within tolerance: {result.within_tolerance}")


if __name__ == "__main__":
    main()

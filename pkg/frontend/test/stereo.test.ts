import { describe, expect, it } from "vitest";

import {
  DEFAULT_EYE_BASELINE_M,
  EGO_FOV_DEG,
  clampGimbalForDisplay,
  defaultEgoParams,
  eyeSeparation,
  stereoEyePoses,
} from "../src/stereo.js";

const DEG = Math.PI / 180;

describe("ego parameters", () => {
  it("field of view is fixed at 110 degrees", () => {
    expect(EGO_FOV_DEG).toBe(110);
    expect(defaultEgoParams().fovDeg).toBe(110);
  });

  it("default eye baseline is 63 mm", () => {
    expect(DEFAULT_EYE_BASELINE_M).toBeCloseTo(0.063, 12);
  });
});

describe("gimbal display clamp", () => {
  it("pan of 100 degrees renders at 90", () => {
    expect(clampGimbalForDisplay(100 * DEG, 0).pan).toBeCloseTo(90 * DEG, 12);
  });

  it("tilt of -95 degrees renders at -90", () => {
    expect(clampGimbalForDisplay(0, -95 * DEG).tilt).toBeCloseTo(-90 * DEG, 12);
  });

  it("in-range values pass through unchanged", () => {
    const g = clampGimbalForDisplay(0.3, -0.2);
    expect(g).toEqual({ pan: 0.3, tilt: -0.2 });
  });
});

describe("stereo eye poses", () => {
  const rover = { x: 1.0, y: 2.0, heading: 0.5 };

  it("eyes differ only by the baseline translation", () => {
    const poses = stereoEyePoses(rover, { pan: 0.2, tilt: -0.1 });
    expect(eyeSeparation(poses)).toBeCloseTo(DEFAULT_EYE_BASELINE_M, 12);
    expect(poses.left.yaw).toBe(poses.right.yaw);
    expect(poses.left.pitch).toBe(poses.right.pitch);
    expect(poses.left.position[2]).toBe(poses.right.position[2]);
  });

  it("gimbal (0,0) faces the rover's forward axis", () => {
    const poses = stereoEyePoses(rover, { pan: 0, tilt: 0 });
    expect(poses.left.yaw).toBeCloseTo(rover.heading, 12);
    expect(poses.left.pitch).toBe(0);
  });

  it("a pan command beyond +90 degrees stays at +90 in the render", () => {
    const poses = stereoEyePoses(rover, { pan: 100 * DEG, tilt: 0 });
    expect(poses.left.yaw).toBeCloseTo(rover.heading + 90 * DEG, 12);
  });

  it("the baseline is perpendicular to the view direction", () => {
    const poses = stereoEyePoses(rover, { pan: 0.7, tilt: 0 });
    const dx = poses.right.position[0] - poses.left.position[0];
    const dy = poses.right.position[1] - poses.left.position[1];
    const dot = dx * Math.cos(poses.left.yaw) + dy * Math.sin(poses.left.yaw);
    expect(dot).toBeCloseTo(0, 12);
  });
});

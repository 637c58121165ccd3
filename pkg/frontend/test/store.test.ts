import { describe, expect, it } from "vitest";

import type { HelloRecord, TelemetryRecord } from "../src/protocol.js";
import { TwinStore } from "../src/store.js";

function hello(): HelloRecord {
  return {
    rec: "hello",
    kind: "rovertwin",
    dt_ns: 10_000_000,
    command_topics: ["drive_cmd", "arm_cmd", "gimbal_cmd", "reset_cmd"],
    telemetry_topics: ["joint_states", "odometry", "gimbal_state", "scenario_events"],
    scenario_id: "single-antenna",
    config_sha256: "x",
    wheel_base: 0.39,
    chain: { mount: [0, 0, 0.1], gripper_offset: [0.06, 0, 0], links: [] },
    antennas: [
      { id: "a1", x: 1.2, y: 0, orientation: 0.7, target_orientation: 1.66, tolerance: 0.087 },
    ],
  };
}

function tel(topic: string, payload: Record<string, unknown>, seq = 1): TelemetryRecord {
  return { rec: "tel", topic, seq, sent_at_ns: 0, delivered_at_ns: 0, payload };
}

function odo(x: number, y: number, tNs: number, resetCount = 0) {
  return tel("odometry", {
    x, y, heading: 0, omega_left: 0, omega_right: 0, reset_count: resetCount, t_ns: tNs,
  });
}

describe("TwinStore", () => {
  it("initializes antennas from hello", () => {
    const store = new TwinStore();
    store.apply(hello());
    const ant = store.view.antennas.get("a1")!;
    expect(ant.aligned).toBe(false);
    expect(store.view.hello!.scenario_id).toBe("single-antenna");
  });

  it("accumulates the odometer from odometry increments", () => {
    const store = new TwinStore();
    store.apply(hello());
    store.apply(odo(0, 0, 10_000_000));
    store.apply(odo(0.3, 0.4, 20_000_000));
    store.apply(odo(0.6, 0.8, 30_000_000));
    expect(store.view.odometerM).toBeCloseTo(1.0, 12);
    expect(store.view.rover.x).toBe(0.6);
    expect(store.view.simTimeNs).toBe(30_000_000);
  });

  it("does not count the reset teleport as distance", () => {
    const store = new TwinStore();
    store.apply(hello());
    store.apply(odo(0, 0, 10_000_000));
    store.apply(odo(2.0, 0, 20_000_000));
    store.apply(odo(0, 0, 30_000_000, 1)); // world reset snaps back to start
    expect(store.view.odometerM).toBeCloseTo(2.0, 12);
    expect(store.view.resetCount).toBe(1);
  });

  it("tracks alignment and completion events", () => {
    const store = new TwinStore();
    store.apply(hello());
    store.apply(tel("scenario_events", { event: "antenna_grasped", id: "a1", t_ns: 1 }));
    expect(store.view.antennas.get("a1")!.grasped).toBe(true);
    store.apply(tel("scenario_events", { event: "antenna_released", id: "a1", t_ns: 2 }));
    store.apply(tel("scenario_events", { event: "antenna_aligned", id: "a1", orientation: 1.65, t_ns: 3 }));
    const ant = store.view.antennas.get("a1")!;
    expect(ant.grasped).toBe(false);
    expect(ant.aligned).toBe(true);
    expect(ant.orientation).toBe(1.65);
    store.apply(tel("scenario_events", { event: "scenario_completed", t_ns: 4 }));
    expect(store.view.completed).toBe(true);
  });

  it("world_reset restores the scenario's antenna view", () => {
    const store = new TwinStore();
    store.apply(hello());
    store.apply(tel("scenario_events", { event: "antenna_aligned", id: "a1", orientation: 1.66, t_ns: 1 }));
    store.apply(tel("scenario_events", { event: "scenario_completed", t_ns: 2 }));
    store.apply(tel("scenario_events", { event: "world_reset", count: 1, t_ns: 3 }));
    const ant = store.view.antennas.get("a1")!;
    expect(ant.orientation).toBe(0.7);
    expect(ant.aligned).toBe(false);
    expect(store.view.completed).toBe(false);
  });

  it("is rebuilt purely from telemetry (stateless with respect to truth)", () => {
    const records = [
      hello(),
      odo(0, 0, 10_000_000),
      odo(1, 0, 20_000_000),
      tel("joint_states", { angles: [0.1, 0, 0, 0, 0, 0], gripper: 0.5, t_ns: 20_000_000 }),
      tel("gimbal_state", { pan: 0.2, tilt: -0.1, t_ns: 20_000_000 }),
    ] as const;
    const a = new TwinStore();
    const b = new TwinStore();
    for (const r of records) a.apply(r as never);
    for (const r of records) b.apply(r as never);
    expect(JSON.stringify({ ...a.view, antennas: [...a.view.antennas] })).toBe(
      JSON.stringify({ ...b.view, antennas: [...b.view.antennas] }),
    );
  });
});

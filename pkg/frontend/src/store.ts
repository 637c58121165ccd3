/**
 * Telemetry-driven state store.
 *
 * The console holds no truth of its own: everything rendered derives from
 * telemetry records applied here, so closing and reopening the page changes
 * nothing in the twin. The odometer accumulates planar travel from the
 * odometry stream (it keeps counting across world resets).
 */

import type { AntennaSpec, HelloRecord, ServerRecord } from "./protocol.js";

export interface RoverView {
  x: number;
  y: number;
  heading: number;
  omegaLeft: number;
  omegaRight: number;
}

export interface AntennaView extends AntennaSpec {
  aligned: boolean;
  grasped: boolean;
}

export interface TwinView {
  connected: boolean;
  hello: HelloRecord | null;
  rover: RoverView;
  joints: number[];
  gripper: number;
  gimbal: { pan: number; tilt: number };
  antennas: Map<string, AntennaView>;
  simTimeNs: number;
  resetCount: number;
  odometerM: number;
  completed: boolean;
  lastEvent: string;
}

function dipoleError(a: number, b: number): number {
  let d = (a - b) % Math.PI;
  if (d < 0) d += Math.PI;
  return Math.min(d, Math.PI - d);
}

export class TwinStore {
  view: TwinView = emptyView();
  private listeners = new Set<(view: TwinView) => void>();

  subscribe(fn: (view: TwinView) => void): () => void {
    this.listeners.add(fn);
    return () => this.listeners.delete(fn);
  }

  private emit(): void {
    for (const fn of this.listeners) fn(this.view);
  }

  setConnected(connected: boolean): void {
    this.view.connected = connected;
    if (!connected) this.view.lastEvent = "connection lost";
    this.emit();
  }

  apply(record: ServerRecord): void {
    if (record.rec === "hello") {
      this.view.hello = record;
      this.view.antennas = new Map(
        record.antennas.map((a) => [
          a.id,
          { ...a, aligned: dipoleError(a.orientation, a.target_orientation) <= a.tolerance, grasped: false },
        ]),
      );
      this.emit();
      return;
    }
    if (record.rec !== "tel") return;
    const p = record.payload as Record<string, any>;
    switch (record.topic) {
      case "odometry": {
        const prev = this.view.rover;
        const hadFix = this.view.simTimeNs > 0;
        if (hadFix && p.reset_count === this.view.resetCount) {
          this.view.odometerM += Math.hypot(p.x - prev.x, p.y - prev.y);
        }
        this.view.rover = {
          x: p.x,
          y: p.y,
          heading: p.heading,
          omegaLeft: p.omega_left,
          omegaRight: p.omega_right,
        };
        this.view.resetCount = p.reset_count;
        this.view.simTimeNs = p.t_ns;
        break;
      }
      case "joint_states":
        this.view.joints = p.angles;
        this.view.gripper = p.gripper;
        break;
      case "gimbal_state":
        this.view.gimbal = { pan: p.pan, tilt: p.tilt };
        break;
      case "scenario_events": {
        this.view.lastEvent = String(p.event);
        const ant = p.id ? this.view.antennas.get(String(p.id)) : undefined;
        if (p.event === "antenna_aligned" && ant) {
          ant.aligned = true;
          if (typeof p.orientation === "number") ant.orientation = p.orientation;
        } else if (p.event === "antenna_misaligned" && ant) {
          ant.aligned = false;
          if (typeof p.orientation === "number") ant.orientation = p.orientation;
        } else if (p.event === "antenna_grasped" && ant) {
          ant.grasped = true;
        } else if (p.event === "antenna_released" && ant) {
          ant.grasped = false;
        } else if (p.event === "scenario_completed") {
          this.view.completed = true;
        } else if (p.event === "world_reset") {
          this.view.completed = false;
          for (const a of this.view.antennas.values()) {
            const spec = this.view.hello?.antennas.find((s) => s.id === a.id);
            if (spec) {
              a.orientation = spec.orientation;
              a.aligned = dipoleError(spec.orientation, spec.target_orientation) <= spec.tolerance;
              a.grasped = false;
            }
          }
        }
        break;
      }
    }
    this.emit();
  }
}

export function emptyView(): TwinView {
  return {
    connected: false,
    hello: null,
    rover: { x: 0, y: 0, heading: 0, omegaLeft: 0, omegaRight: 0 },
    joints: [0, 0, 0, 0, 0, 0],
    gripper: 1,
    gimbal: { pan: 0, tilt: 0 },
    antennas: new Map(),
    simTimeNs: 0,
    resetCount: 0,
    odometerM: 0,
    completed: false,
    lastEvent: "",
  };
}

/** Session HUD: connection state, sim clock, odometer, resets, scenario badges. */

import type { ConnectionStatus } from "./client.js";
import type { TwinView } from "./store.js";

export interface HudElements {
  status: HTMLElement;
  banner: HTMLElement;
  simTime: HTMLElement;
  pose: HTMLElement;
  odometer: HTMLElement;
  resets: HTMLElement;
  gimbal: HTMLElement;
  scenario: HTMLElement;
  viewMode: HTMLElement;
}

export function formatSimTime(ns: number): string {
  const total = Math.floor(ns / 1e9);
  const m = Math.floor(total / 60);
  const s = total % 60;
  return `${m}:${String(s).padStart(2, "0")}`;
}

export function renderHud(el: HudElements, view: TwinView, status: ConnectionStatus, viewMode: string): void {
  el.status.textContent = status;
  el.status.className = `status ${status}`;
  el.banner.style.display = status === "connected" ? "none" : "block";
  el.banner.textContent = status === "reconnecting" ? "connection lost - reconnecting" : "connecting...";
  el.simTime.textContent = formatSimTime(view.simTimeNs);
  el.pose.textContent =
    `x ${view.rover.x.toFixed(2)} m  y ${view.rover.y.toFixed(2)} m  ` +
    `hdg ${((view.rover.heading * 180) / Math.PI).toFixed(1)}°`;
  el.odometer.textContent = `${view.odometerM.toFixed(2)} m`;
  el.resets.textContent = String(view.resetCount);
  el.gimbal.textContent =
    `pan ${((view.gimbal.pan * 180) / Math.PI).toFixed(0)}° ` +
    `tilt ${((view.gimbal.tilt * 180) / Math.PI).toFixed(0)}°`;
  const antennas = [...view.antennas.values()];
  if (antennas.length === 0) {
    el.scenario.textContent = "no scenario";
  } else if (view.completed) {
    el.scenario.textContent = "task complete";
  } else {
    const aligned = antennas.filter((a) => a.aligned).length;
    el.scenario.textContent = `${aligned}/${antennas.length} aligned`;
  }
  el.viewMode.textContent = viewMode;
}

/**
 * End-to-end check against a live twin: spawn the Python server, connect the
 * console's client over a real WebSocket, drive via the keyboard mapping,
 * exercise the gimbal clamp, and reset the world.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { fileURLToPath } from "node:url";

import { WebSocket } from "ws";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { TwinClient, type WebSocketLike } from "../src/client.js";
import { DEFAULT_MAPPING, driveFromKeys, wheelSpeeds } from "../src/mapping.js";
import { TwinStore } from "../src/store.js";

const REPO_ROOT = fileURLToPath(new URL("../..", import.meta.url));

let twin: ChildProcess;
let wsPort = 0;

function nodeWs(url: string): WebSocketLike {
  return new WebSocket(url) as unknown as WebSocketLike;
}

async function connectedClient(): Promise<{ client: TwinClient; store: TwinStore }> {
  const store = new TwinStore();
  const client = new TwinClient(`ws://127.0.0.1:${wsPort}`, { wsFactory: nodeWs });
  client.onRecord = (r) => store.apply(r);
  client.connect();
  await waitFor(() => client.status === "connected", 5000, "client connect");
  return { client, store };
}

async function waitFor(cond: () => boolean, timeoutMs: number, what: string): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (cond()) return;
    await new Promise((r) => setTimeout(r, 20));
  }
  throw new Error(`timed out waiting for ${what}`);
}

beforeAll(async () => {
  twin = spawn(
    "python3",
    [
      "-m", "rovertwin.cli", "serve",
      "--config", "default",
      "--scenario", "configs/scenario_antenna.yaml",
      "--port", "0", "--tcp-port", "0", "--seed", "5",
    ],
    { cwd: REPO_ROOT, stdio: ["ignore", "pipe", "pipe"] },
  );
  let stdout = "";
  twin.stdout!.on("data", (chunk) => {
    stdout += String(chunk);
  });
  let stderr = "";
  twin.stderr!.on("data", (chunk) => {
    stderr += String(chunk);
  });
  try {
    await waitFor(() => /listening ws=(\d+)/.test(stdout), 15000, "twin to listen");
  } catch (e) {
    throw new Error(`${e}; stderr: ${stderr}`);
  }
  wsPort = Number(/listening ws=(\d+)/.exec(stdout)![1]);
}, 20000);

afterAll(() => {
  twin?.kill("SIGTERM");
});

describe("console against a live twin", () => {
  it("connects and sees sim time advancing on the HUD state", async () => {
    const { client, store } = await connectedClient();
    await waitFor(() => store.view.hello !== null, 5000, "hello");
    const t0 = store.view.simTimeNs;
    await waitFor(() => store.view.simTimeNs > t0, 5000, "sim time to advance");
    client.close();
  }, 15000);

  it("drives forward via the keyboard mapping and the odometer increases", async () => {
    const { client, store } = await connectedClient();
    await waitFor(() => store.view.hello !== null, 5000, "hello");

    const intent = driveFromKeys(new Set([DEFAULT_MAPPING.keyboard.forward]), DEFAULT_MAPPING);
    const payload = wheelSpeeds(intent, DEFAULT_MAPPING, store.view.hello!.wheel_base);
    const send = setInterval(() => client.publish("drive_cmd", payload), 50);
    try {
      await waitFor(() => store.view.rover.x > 0.05 && store.view.odometerM > 0.05, 10000, "odometry increase");
    } finally {
      clearInterval(send);
    }
    client.publish("drive_cmd", { v_left: 0, v_right: 0 });
    client.close();
  }, 20000);

  it("clamps a 100 degree pan command at 90 degrees", async () => {
    const { client, store } = await connectedClient();
    await waitFor(() => store.view.hello !== null, 5000, "hello");
    client.publish("gimbal_cmd", { pan: (100 * Math.PI) / 180, tilt: 0 });
    await waitFor(() => Math.abs(store.view.gimbal.pan - Math.PI / 2) < 1e-9, 5000, "gimbal clamp");
    client.close();
  }, 15000);

  it("reset returns the rover to the start pose and bumps the HUD counter", async () => {
    const { client, store } = await connectedClient();
    await waitFor(() => store.view.hello !== null, 5000, "hello");

    const payload = wheelSpeeds({ forward: 1, turn: 0 }, DEFAULT_MAPPING, store.view.hello!.wheel_base);
    const send = setInterval(() => client.publish("drive_cmd", payload), 50);
    try {
      await waitFor(() => store.view.rover.x > 0.05, 10000, "some driving");
    } finally {
      clearInterval(send);
    }

    const resetsBefore = store.view.resetCount;
    client.publish("reset_cmd", {});
    await waitFor(() => store.view.resetCount === resetsBefore + 1, 5000, "reset count");
    await waitFor(() => Math.abs(store.view.rover.x) < 1e-9, 5000, "rover back at start");
    client.close();
  }, 20000);
});

/**
 * Console entry point: connect, render, and publish operator commands.
 *
 * Egocentric mode renders the two eye cameras side by side; exocentric mode
 * is a free orbit camera. Commands are sent on a fixed 20 Hz cadence from
 * whatever the input devices currently say, independent of their event rate.
 */

import * as THREE from "three";
import { OrbitControls } from "three/addons/controls/OrbitControls.js";

import { TwinClient } from "./client.js";
import { renderHud, type HudElements } from "./hud.js";
import {
  DEFAULT_MAPPING,
  driveFromGamepad,
  driveFromKeys,
  gimbalRates,
  loadMapping,
  wheelSpeeds,
  type ControlMapping,
} from "./mapping.js";
import { buildScene, createStereoCameras, placeStereoCameras, updateScene, type SceneParts } from "./scene.js";
import { clampGimbalForDisplay, defaultEgoParams } from "./stereo.js";
import { TwinStore } from "./store.js";

type ViewMode = "egocentric" | "exocentric";

const params = new URLSearchParams(location.search);
const wsUrl = params.get("twin") ?? `ws://${location.hostname}:${params.get("port") ?? "8790"}`;

const canvas = document.getElementById("view") as HTMLCanvasElement;
const renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
renderer.setPixelRatio(window.devicePixelRatio);

const hud: HudElements = {
  status: document.getElementById("status")!,
  banner: document.getElementById("banner")!,
  simTime: document.getElementById("sim-time")!,
  pose: document.getElementById("pose")!,
  odometer: document.getElementById("odometer")!,
  resets: document.getElementById("resets")!,
  gimbal: document.getElementById("gimbal")!,
  scenario: document.getElementById("scenario")!,
  viewMode: document.getElementById("view-mode")!,
};

const store = new TwinStore();
const client = new TwinClient(wsUrl);
client.onRecord = (record) => store.apply(record);
client.onStatus = (status) => store.setConnected(status === "connected");

let mapping: ControlMapping = DEFAULT_MAPPING;
fetch("mapping.default.json")
  .then((r) => (r.ok ? r.text() : Promise.reject(new Error(String(r.status)))))
  .then((text) => {
    mapping = loadMapping(text);
  })
  .catch(() => {
    /* editable mapping file missing: keep compiled-in defaults */
  });

const egoParams = defaultEgoParams();
if (params.get("baseline")) egoParams.eyeBaselineM = Number(params.get("baseline"));

let parts: SceneParts | null = null;
let stereo = createStereoCameras(egoParams, 1);
const exoCamera = new THREE.PerspectiveCamera(60, 1, 0.05, 200);
exoCamera.up.set(0, 0, 1);
exoCamera.position.set(-2.5, -2.0, 1.8);
const orbit = new OrbitControls(exoCamera, canvas);
orbit.target.set(0.5, 0, 0.2);

let viewMode: ViewMode = "egocentric";

// ----------------------------------------------------------------------
// input state
// ----------------------------------------------------------------------

const pressed = new Set<string>();
let gimbalTarget = { pan: 0, tilt: 0 };
let gripperTarget = 1.0;
let armTargets: number[] | null = null;
let selectedJoint = 0;

window.addEventListener("keydown", (ev) => {
  if (ev.repeat) return;
  pressed.add(ev.code);
  const kb = mapping.keyboard;
  if (ev.code === kb.reset) {
    client.publish("reset_cmd", {});
    gimbalTarget = { pan: 0, tilt: 0 };
    gripperTarget = 1.0;
    armTargets = null;
  } else if (ev.code === kb.viewToggle) {
    viewMode = viewMode === "egocentric" ? "exocentric" : "egocentric";
  } else if (ev.code === kb.gripperClose) {
    gripperTarget = 0.0;
    client.publish("arm_cmd", { gripper: gripperTarget });
  } else if (ev.code === kb.gripperOpen) {
    gripperTarget = 1.0;
    client.publish("arm_cmd", { gripper: gripperTarget });
  } else if (ev.code === kb.jointNext) {
    selectedJoint = (selectedJoint + 1) % 6;
  } else if (ev.code === kb.jointPrev) {
    selectedJoint = (selectedJoint + 5) % 6;
  } else if (ev.code === kb.jointPlus || ev.code === kb.jointMinus) {
    const direction = ev.code === kb.jointPlus ? 1 : -1;
    armTargets = armTargets ?? [...store.view.joints];
    armTargets[selectedJoint] = (armTargets[selectedJoint] ?? 0) + direction * mapping.speeds.jointStep;
    client.publish("arm_cmd", { targets: armTargets, gripper: gripperTarget });
  }
});
window.addEventListener("keyup", (ev) => pressed.delete(ev.code));

let lastResetButton = false;

function pollInputs(dtS: number): void {
  let intent = driveFromKeys(pressed, mapping);
  const pads = navigator.getGamepads?.() ?? [];
  const pad = pads.find((p) => p && p.connected);
  if (pad) {
    const padIntent = driveFromGamepad(pad.axes, mapping);
    if (Math.abs(padIntent.forward) > Math.abs(intent.forward)) intent.forward = padIntent.forward;
    if (Math.abs(padIntent.turn) > Math.abs(intent.turn)) intent.turn = padIntent.turn;
    const gp = mapping.gamepad;
    const resetDown = pad.buttons[gp.resetButton]?.pressed ?? false;
    if (resetDown && !lastResetButton) client.publish("reset_cmd", {});
    lastResetButton = resetDown;
    if (pad.buttons[gp.gripperCloseButton]?.pressed) {
      gripperTarget = 0.0;
      client.publish("arm_cmd", { gripper: gripperTarget });
    } else if (pad.buttons[gp.gripperOpenButton]?.pressed) {
      gripperTarget = 1.0;
      client.publish("arm_cmd", { gripper: gripperTarget });
    }
    gimbalTarget.pan -= (pad.axes[gp.panAxis] ?? 0) * mapping.speeds.gimbalRate * dtS;
    gimbalTarget.tilt -= (pad.axes[gp.tiltAxis] ?? 0) * mapping.speeds.gimbalRate * dtS;
  }

  const rates = gimbalRates(pressed, mapping);
  gimbalTarget.pan += rates.pan * dtS;
  gimbalTarget.tilt += rates.tilt * dtS;
  gimbalTarget = clampGimbalForDisplay(gimbalTarget.pan, gimbalTarget.tilt);

  const wheelBase = store.view.hello?.wheel_base ?? 0.39;
  client.publish("drive_cmd", wheelSpeeds(intent, mapping, wheelBase));
  if (rates.pan !== 0 || rates.tilt !== 0 || pad) {
    client.publish("gimbal_cmd", gimbalTarget);
  }
}

// ----------------------------------------------------------------------
// render loop
// ----------------------------------------------------------------------

function resize(): void {
  const w = canvas.clientWidth || window.innerWidth;
  const h = canvas.clientHeight || window.innerHeight;
  renderer.setSize(w, h, false);
}
window.addEventListener("resize", resize);
resize();

let lastFrame = performance.now();

function frame(now: number): void {
  const dtS = Math.min((now - lastFrame) / 1000, 0.1);
  lastFrame = now;
  pollInputs(dtS);

  const view = store.view;
  if (view.hello && !parts) {
    parts = buildScene(view.hello);
  }
  if (parts) {
    updateScene(parts, view);
    const w = renderer.domElement.width;
    const h = renderer.domElement.height;
    renderer.setScissorTest(true);
    if (viewMode === "egocentric") {
      const aspect = w / 2 / h;
      stereo.forEach((cam) => {
        if (cam.aspect !== aspect) {
          cam.aspect = aspect;
          cam.updateProjectionMatrix();
        }
      });
      placeStereoCameras(stereo, view, egoParams);
      renderer.setViewport(0, 0, w / 2, h);
      renderer.setScissor(0, 0, w / 2, h);
      renderer.render(parts.scene, stereo[0]);
      renderer.setViewport(w / 2, 0, w / 2, h);
      renderer.setScissor(w / 2, 0, w / 2, h);
      renderer.render(parts.scene, stereo[1]);
    } else {
      if (exoCamera.aspect !== w / h) {
        exoCamera.aspect = w / h;
        exoCamera.updateProjectionMatrix();
      }
      orbit.update();
      renderer.setViewport(0, 0, w, h);
      renderer.setScissor(0, 0, w, h);
      renderer.render(parts.scene, exoCamera);
    }
  }

  renderHud(hud, view, client.status, viewMode);
  requestAnimationFrame(frame);
}

client.connect();
requestAnimationFrame(frame);

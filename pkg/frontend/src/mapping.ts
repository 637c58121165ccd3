/**
 * Control mapping: keyboard and gamepad inputs to command intents.
 *
 * The mapping ships as an editable JSON file (mapping.default.json); reset
 * must stay on its own dedicated button so it cannot fire accidentally while
 * driving.
 */

export interface KeyboardMap {
  forward: string;
  backward: string;
  left: string;
  right: string;
  gimbalUp: string;
  gimbalDown: string;
  gimbalLeft: string;
  gimbalRight: string;
  gripperClose: string;
  gripperOpen: string;
  jointPrev: string;
  jointNext: string;
  jointMinus: string;
  jointPlus: string;
  reset: string;
  viewToggle: string;
}

export interface GamepadMap {
  driveAxis: number;
  turnAxis: number;
  panAxis: number;
  tiltAxis: number;
  gripperCloseButton: number;
  gripperOpenButton: number;
  resetButton: number;
  deadzone: number;
}

export interface ControlMapping {
  keyboard: KeyboardMap;
  gamepad: GamepadMap;
  speeds: {
    maxLinear: number; // m/s at full deflection
    maxTurn: number; // rad/s at full deflection
    gimbalRate: number; // rad/s while a gimbal key is held
    jointStep: number; // rad per joint nudge
  };
}

export const DEFAULT_MAPPING: ControlMapping = {
  keyboard: {
    forward: "KeyW",
    backward: "KeyS",
    left: "KeyA",
    right: "KeyD",
    gimbalUp: "ArrowUp",
    gimbalDown: "ArrowDown",
    gimbalLeft: "ArrowLeft",
    gimbalRight: "ArrowRight",
    gripperClose: "KeyG",
    gripperOpen: "KeyH",
    jointPrev: "KeyQ",
    jointNext: "KeyE",
    jointMinus: "KeyZ",
    jointPlus: "KeyX",
    reset: "KeyR",
    viewToggle: "KeyV",
  },
  gamepad: {
    driveAxis: 1,
    turnAxis: 0,
    panAxis: 2,
    tiltAxis: 3,
    gripperCloseButton: 0,
    gripperOpenButton: 1,
    resetButton: 9,
    deadzone: 0.12,
  },
  speeds: { maxLinear: 0.7, maxTurn: 1.6, gimbalRate: 1.2, jointStep: 0.05 },
};

/** Returns a list of problems; empty means the mapping is usable. */
export function validateMapping(m: ControlMapping): string[] {
  const problems: string[] = [];
  const kb = m.keyboard;
  const driveKeys = [kb.forward, kb.backward, kb.left, kb.right];
  if (driveKeys.some((k) => !k)) problems.push("drive_cmd unreachable: missing drive keys");
  if (!kb.gimbalUp || !kb.gimbalLeft) problems.push("gimbal_cmd unreachable: missing gimbal keys");
  if (!kb.gripperClose || !kb.jointPlus) problems.push("arm_cmd unreachable: missing arm keys");
  if (!kb.reset) problems.push("reset_cmd unreachable: missing reset key");

  const others = Object.entries(kb)
    .filter(([name]) => name !== "reset")
    .map(([, key]) => key);
  if (others.includes(kb.reset)) problems.push("reset key must be dedicated (shared with another binding)");

  const gp = m.gamepad;
  const otherButtons = [gp.gripperCloseButton, gp.gripperOpenButton];
  if (otherButtons.includes(gp.resetButton)) {
    problems.push("reset button must be dedicated (shared with another binding)");
  }
  if (gp.deadzone < 0 || gp.deadzone >= 1) problems.push("gamepad deadzone must lie in [0, 1)");
  return problems;
}

export interface DriveIntent {
  forward: number; // [-1, 1]
  turn: number; // [-1, 1], positive = counter-clockwise
}

export function driveFromKeys(pressed: ReadonlySet<string>, m: ControlMapping): DriveIntent {
  const kb = m.keyboard;
  const forward = (pressed.has(kb.forward) ? 1 : 0) - (pressed.has(kb.backward) ? 1 : 0);
  const turn = (pressed.has(kb.left) ? 1 : 0) - (pressed.has(kb.right) ? 1 : 0);
  return { forward, turn };
}

function deadzoned(value: number, deadzone: number): number {
  return Math.abs(value) < deadzone ? 0 : value;
}

export function driveFromGamepad(axes: readonly number[], m: ControlMapping): DriveIntent {
  const gp = m.gamepad;
  // + 0 keeps a centered stick from producing -0 after axis inversion
  return {
    forward: -deadzoned(axes[gp.driveAxis] ?? 0, gp.deadzone) + 0,
    turn: -deadzoned(axes[gp.turnAxis] ?? 0, gp.deadzone) + 0,
  };
}

/** Arcade mix: intent to per-wheel contact speeds (m/s). */
export function wheelSpeeds(intent: DriveIntent, m: ControlMapping, wheelBase: number) {
  const v = intent.forward * m.speeds.maxLinear;
  const omega = intent.turn * m.speeds.maxTurn;
  return {
    v_left: v - (omega * wheelBase) / 2,
    v_right: v + (omega * wheelBase) / 2,
  };
}

export function gimbalRates(pressed: ReadonlySet<string>, m: ControlMapping) {
  const kb = m.keyboard;
  return {
    pan: ((pressed.has(kb.gimbalLeft) ? 1 : 0) - (pressed.has(kb.gimbalRight) ? 1 : 0)) * m.speeds.gimbalRate,
    tilt: ((pressed.has(kb.gimbalUp) ? 1 : 0) - (pressed.has(kb.gimbalDown) ? 1 : 0)) * m.speeds.gimbalRate,
  };
}

export function loadMapping(json: string): ControlMapping {
  const doc = JSON.parse(json) as Partial<ControlMapping>;
  const merged: ControlMapping = {
    keyboard: { ...DEFAULT_MAPPING.keyboard, ...(doc.keyboard ?? {}) },
    gamepad: { ...DEFAULT_MAPPING.gamepad, ...(doc.gamepad ?? {}) },
    speeds: { ...DEFAULT_MAPPING.speeds, ...(doc.speeds ?? {}) },
  };
  const problems = validateMapping(merged);
  if (problems.length > 0) {
    throw new Error(`invalid control mapping: ${problems.join("; ")}`);
  }
  return merged;
}

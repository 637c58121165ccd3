/**
 * Record types for the twin's socket protocol (see ../PROTOCOL.md).
 * One JSON object per WebSocket text frame.
 */

export const COMMAND_TOPICS = ["drive_cmd", "arm_cmd", "gimbal_cmd", "reset_cmd"] as const;
export type CommandTopic = (typeof COMMAND_TOPICS)[number];

export interface ChainLink {
  offset: [number, number, number];
  axis: [number, number, number];
  min: number;
  max: number;
}

export interface AntennaSpec {
  id: string;
  x: number;
  y: number;
  orientation: number;
  target_orientation: number;
  tolerance: number;
}

export interface HelloRecord {
  rec: "hello";
  kind: string;
  dt_ns: number;
  command_topics: string[];
  telemetry_topics: string[];
  scenario_id: string;
  config_sha256: string;
  wheel_base: number;
  chain: {
    mount: [number, number, number];
    gripper_offset: [number, number, number];
    links: ChainLink[];
  };
  antennas: AntennaSpec[];
}

export interface TelemetryRecord {
  rec: "tel";
  topic: string;
  seq: number;
  sent_at_ns: number;
  delivered_at_ns: number;
  payload: Record<string, unknown>;
}

export interface ErrorRecord {
  rec: "error";
  message: string;
}

export type ServerRecord = HelloRecord | TelemetryRecord | ErrorRecord;

export function parseRecord(text: string): ServerRecord | null {
  let value: unknown;
  try {
    value = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof value !== "object" || value === null) return null;
  const rec = (value as { rec?: unknown }).rec;
  if (rec === "hello" || rec === "tel" || rec === "error") {
    return value as ServerRecord;
  }
  return null;
}

export function isCommandTopic(topic: string): topic is CommandTopic {
  return (COMMAND_TOPICS as readonly string[]).includes(topic);
}

export function encodeCommand(topic: CommandTopic, payload: Record<string, unknown>): string {
  if (!isCommandTopic(topic)) {
    throw new Error(`not a command topic: ${topic}`);
  }
  return JSON.stringify({ topic, payload });
}

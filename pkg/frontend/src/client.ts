/**
 * WebSocket client with automatic reconnect and a publish rate cap.
 *
 * Commands are limited to 20 Hz per topic no matter how fast the input
 * device fires; reset_cmd is edge-triggered by the UI so the cap never eats
 * it in practice, but it is capped all the same. The WebSocket constructor is
 * injectable so the client is testable without a browser.
 */

import { encodeCommand, parseRecord, type CommandTopic, type ServerRecord } from "./protocol.js";

export interface WebSocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
}

export type ConnectionStatus = "connecting" | "connected" | "reconnecting" | "closed";

export interface TwinClientOptions {
  wsFactory?: (url: string) => WebSocketLike;
  now?: () => number; // ms clock, injectable for tests
  publishHz?: number;
  reconnectDelayMs?: number;
  setTimeoutFn?: (fn: () => void, ms: number) => unknown;
}

export class TwinClient {
  readonly url: string;
  status: ConnectionStatus = "closed";
  onRecord: ((record: ServerRecord) => void) | null = null;
  onStatus: ((status: ConnectionStatus) => void) | null = null;

  private ws: WebSocketLike | null = null;
  private readonly wsFactory: (url: string) => WebSocketLike;
  private readonly now: () => number;
  private readonly minIntervalMs: number;
  private readonly reconnectDelayMs: number;
  private readonly setTimeoutFn: (fn: () => void, ms: number) => unknown;
  private lastSent = new Map<string, number>();
  private closedByUser = false;

  constructor(url: string, options: TwinClientOptions = {}) {
    this.url = url;
    this.wsFactory = options.wsFactory ?? ((u) => new WebSocket(u) as unknown as WebSocketLike);
    this.now = options.now ?? (() => Date.now());
    this.minIntervalMs = 1000 / (options.publishHz ?? 20);
    this.reconnectDelayMs = options.reconnectDelayMs ?? 1000;
    this.setTimeoutFn = options.setTimeoutFn ?? ((fn, ms) => setTimeout(fn, ms));
  }

  private setStatus(status: ConnectionStatus): void {
    this.status = status;
    this.onStatus?.(status);
  }

  connect(): void {
    this.closedByUser = false;
    this.setStatus(this.status === "closed" ? "connecting" : "reconnecting");
    const ws = this.wsFactory(this.url);
    this.ws = ws;
    ws.onopen = () => {
      this.lastSent.clear();
      this.setStatus("connected");
    };
    ws.onmessage = (ev) => {
      const record = parseRecord(String(ev.data));
      if (record) this.onRecord?.(record);
    };
    const onDown = () => {
      if (this.ws !== ws) return;
      this.ws = null;
      if (this.closedByUser) {
        this.setStatus("closed");
        return;
      }
      this.setStatus("reconnecting");
      this.setTimeoutFn(() => {
        if (!this.closedByUser) this.connect();
      }, this.reconnectDelayMs);
    };
    ws.onclose = onDown;
    ws.onerror = () => {
      /* the close event follows; status change happens there */
    };
  }

  close(): void {
    this.closedByUser = true;
    this.ws?.close();
    this.ws = null;
    this.setStatus("closed");
  }

  /**
   * Publish a command. Returns false when dropped (not connected, or the
   * per-topic 20 Hz cap has not elapsed yet).
   */
  publish(topic: CommandTopic, payload: Record<string, unknown>): boolean {
    if (this.status !== "connected" || !this.ws) return false;
    const t = this.now();
    const last = this.lastSent.get(topic);
    if (last !== undefined && t - last < this.minIntervalMs) return false;
    this.lastSent.set(topic, t);
    this.ws.send(encodeCommand(topic, payload));
    return true;
  }
}

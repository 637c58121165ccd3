import { describe, expect, it } from "vitest";

import { COMMAND_TOPICS, encodeCommand, isCommandTopic, parseRecord } from "../src/protocol.js";

describe("parseRecord", () => {
  it("parses telemetry records", () => {
    const rec = parseRecord(
      '{"rec":"tel","topic":"odometry","seq":3,"sent_at_ns":10,"delivered_at_ns":20,"payload":{"x":1.5}}',
    );
    expect(rec).not.toBeNull();
    expect(rec!.rec).toBe("tel");
    if (rec!.rec === "tel") {
      expect(rec!.topic).toBe("odometry");
      expect(rec!.payload.x).toBe(1.5);
    }
  });

  it("parses hello and error records", () => {
    expect(parseRecord('{"rec":"hello","kind":"rovertwin"}')!.rec).toBe("hello");
    expect(parseRecord('{"rec":"error","message":"nope"}')!.rec).toBe("error");
  });

  it("rejects junk without throwing", () => {
    expect(parseRecord("not json")).toBeNull();
    expect(parseRecord('{"something":"else"}')).toBeNull();
    expect(parseRecord("42")).toBeNull();
  });
});

describe("encodeCommand", () => {
  it("round-trips through JSON", () => {
    const text = encodeCommand("drive_cmd", { v_left: 0.5, v_right: -0.5 });
    expect(JSON.parse(text)).toEqual({ topic: "drive_cmd", payload: { v_left: 0.5, v_right: -0.5 } });
  });

  it("knows the four command topics", () => {
    expect(COMMAND_TOPICS).toHaveLength(4);
    for (const t of COMMAND_TOPICS) expect(isCommandTopic(t)).toBe(true);
    expect(isCommandTopic("odometry")).toBe(false);
  });
});

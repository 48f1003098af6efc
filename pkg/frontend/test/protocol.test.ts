import { describe, expect, it } from "vitest";

import { controlMessage, parseServerMessage, startMessage } from "../src/protocol.js";

describe("parseServerMessage", () => {
  it("rejects non-JSON and non-objects", () => {
    expect(parseServerMessage("nope")).toBeNull();
    expect(parseServerMessage('"just a string"')).toBeNull();
    expect(parseServerMessage("[1,2]")).toBeNull();
  });

  it("rejects unknown types and incomplete states", () => {
    expect(parseServerMessage(JSON.stringify({ type: "mystery" }))).toBeNull();
    expect(parseServerMessage(JSON.stringify({ type: "state", tick: 1 }))).toBeNull();
  });

  it("accepts well-formed frames", () => {
    const pose = { s: 0, v: 0, a: 0, x: 0, y: 0, heading: 0, length: 4.5, width: 2 };
    const doc = {
      type: "state", tick: 1, t: 0.1, left: pose, straight: pose,
      d_l: 1, d_s: 1, io: 0.5, itsi: 0.5, s_norm: 0.5,
      p_l: [0.5, 0.5], p_s: [0.5, 0.5],
      av_decision: "yield", expert_category: "none",
    };
    const msg = parseServerMessage(JSON.stringify(doc));
    expect(msg?.type).toBe("state");
  });
});

describe("outbound messages", () => {
  it("control carries the accel", () => {
    expect(JSON.parse(controlMessage(-3.0))).toEqual({ type: "control", accel: -3.0 });
  });

  it("start carries overrides", () => {
    expect(JSON.parse(startMessage({ seed: 3, v0_straight: 8 }))).toEqual({
      type: "start", seed: 3, v0_straight: 8,
    });
  });
});

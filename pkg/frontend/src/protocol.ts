/** Wire protocol types mirroring docs/protocol.md. */

export interface VehiclePose {
  s: number;
  v: number;
  a: number;
  x: number;
  y: number;
  heading: number;
  length: number;
  width: number;
}

export interface SceneMsg {
  type: "scene";
  lane_width: number;
  box_half: number;
  conflict_point: { x: number; y: number };
  tick_seconds: number;
  control_bounds: [number, number];
}

export interface StateMsg {
  type: "state";
  tick: number;
  t: number;
  left: VehiclePose;
  straight: VehiclePose;
  d_l: number;
  d_s: number;
  io: number;
  itsi: number;
  s_norm: number;
  p_l: [number, number];
  p_s: [number, number];
  av_decision: string;
  expert_category: string;
}

export interface EndMsg {
  type: "end";
  reason: string;
  metrics: {
    transit_av: number | null;
    transit_hv: number | null;
    combined: number | null;
    pet: number | null;
    collision: boolean;
    severe_conflict: boolean;
    decision_consistency: boolean | null;
    terminal_reason: string;
    seed: number;
  };
}

export interface ErrorMsg {
  type: "error";
  code: string;
  message: string;
}

export type ServerMsg = SceneMsg | StateMsg | EndMsg | ErrorMsg;

const KNOWN_TYPES = new Set(["scene", "state", "end", "error"]);

/** Parse one server frame; malformed frames return null (caller skips and logs). */
export function parseServerMessage(raw: string): ServerMsg | null {
  let doc: unknown;
  try {
    doc = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof doc !== "object" || doc === null) return null;
  const type = (doc as { type?: unknown }).type;
  if (typeof type !== "string" || !KNOWN_TYPES.has(type)) return null;
  if (type === "state") {
    const msg = doc as StateMsg;
    if (
      typeof msg.tick !== "number" ||
      typeof msg.io !== "number" ||
      !Array.isArray(msg.p_l) ||
      !Array.isArray(msg.p_s) ||
      !msg.left ||
      !msg.straight
    ) {
      return null;
    }
  }
  return doc as ServerMsg;
}

export function controlMessage(accel: number): string {
  return JSON.stringify({ type: "control", accel });
}

export function startMessage(overrides: Record<string, number> = {}): string {
  return JSON.stringify({ type: "start", ...overrides });
}

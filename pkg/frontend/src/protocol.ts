/** Wire protocol: envelope {v, type, seq, payload}, protocol version 1.
 *
 * Decoding is defensive (unknown messages are reported, never thrown past
 * the boundary); encoding goes through the builders below so every outbound
 * message shares one code path. The runtime has no dependencies; the test
 * suite cross-checks these guards against zod schemas.
 */

export const PROTOCOL_VERSION = 1;

export interface StatePayload {
  t: number;
  robot: { x: number; y: number; theta: number };
  inputs: { v_x: number; v_y: number; omega: number };
  h_value: number;
  plan: [number, number, number][];
  obstacles: {
    x: number;
    y: number;
    theta: number;
    shape: FootprintJson;
  }[];
  paused: boolean;
}

export interface FieldSlicePayload {
  i_theta: number;
  i_t: number;
  nx: number;
  ny: number;
  resolution: number;
  origin: [number, number];
  theta: number;
  data: string; // base64 little-endian f32, ix-major rows of ny
}

export interface EventPayload {
  level: "info" | "error";
  text: string;
}

export type FootprintJson =
  | { kind: "ellipse"; a: number; b: number }
  | { kind: "polygon"; vertices: [number, number][] };

export type ServerMessage =
  | { type: "state"; seq: number; payload: StatePayload }
  | { type: "field_slice"; seq: number; payload: FieldSlicePayload }
  | { type: "event"; seq: number; payload: EventPayload };

export interface DecodedSlice {
  nx: number;
  ny: number;
  resolution: number;
  origin: [number, number];
  theta: number;
  values: Float32Array; // index ix * ny + iy
  receivedAt: number; // ms epoch
}

const isNum = (v: unknown): v is number =>
  typeof v === "number" && Number.isFinite(v);

function isPose3(v: unknown): v is [number, number, number] {
  return Array.isArray(v) && v.length === 3 && v.every(isNum);
}

function isStatePayload(p: any): p is StatePayload {
  return (
    p != null &&
    isNum(p.t) &&
    p.robot != null &&
    isNum(p.robot.x) &&
    isNum(p.robot.y) &&
    isNum(p.robot.theta) &&
    p.inputs != null &&
    isNum(p.inputs.v_x) &&
    isNum(p.inputs.v_y) &&
    isNum(p.inputs.omega) &&
    isNum(p.h_value) &&
    Array.isArray(p.plan) &&
    p.plan.every(isPose3) &&
    Array.isArray(p.obstacles) &&
    typeof p.paused === "boolean"
  );
}

function isFieldSlicePayload(p: any): p is FieldSlicePayload {
  return (
    p != null &&
    isNum(p.nx) &&
    isNum(p.ny) &&
    p.nx > 0 &&
    p.ny > 0 &&
    isNum(p.resolution) &&
    Array.isArray(p.origin) &&
    p.origin.length === 2 &&
    p.origin.every(isNum) &&
    isNum(p.theta) &&
    isNum(p.i_theta) &&
    isNum(p.i_t) &&
    typeof p.data === "string"
  );
}

function isEventPayload(p: any): p is EventPayload {
  return p != null && (p.level === "info" || p.level === "error") &&
    typeof p.text === "string";
}

/** Parse one server frame; returns null (with a reason) on anything that is
 * not a well-formed v1 message, so a bad frame can never break the loop. */
export function parseServerMessage(
  raw: string,
): { msg: ServerMessage | null; error?: string } {
  let obj: any;
  try {
    obj = JSON.parse(raw);
  } catch {
    return { msg: null, error: "not JSON" };
  }
  if (obj == null || obj.v !== PROTOCOL_VERSION || !isNum(obj.seq)) {
    return { msg: null, error: "bad envelope" };
  }
  const { type, seq, payload } = obj;
  if (type === "state" && isStatePayload(payload)) {
    return { msg: { type, seq, payload } };
  }
  if (type === "field_slice" && isFieldSlicePayload(payload)) {
    return { msg: { type, seq, payload } };
  }
  if (type === "event" && isEventPayload(payload)) {
    return { msg: { type, seq, payload } };
  }
  return { msg: null, error: `unknown or malformed type ${String(type)}` };
}

function base64ToBytes(b64: string): Uint8Array {
  if (typeof atob === "function") {
    const bin = atob(b64);
    const out = new Uint8Array(bin.length);
    for (let i = 0; i < bin.length; i++) out[i] = bin.charCodeAt(i);
    return out;
  }
  // node (tests)
  return new Uint8Array(Buffer.from(b64, "base64"));
}

/** Decode a field_slice payload into a typed array (little-endian f32). */
export function decodeFieldSlice(
  p: FieldSlicePayload,
  now: number = Date.now(),
): DecodedSlice {
  const bytes = base64ToBytes(p.data);
  const expected = p.nx * p.ny * 4;
  if (bytes.byteLength !== expected) {
    throw new Error(
      `field slice payload is ${bytes.byteLength} bytes, expected ${expected}`,
    );
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  const values = new Float32Array(p.nx * p.ny);
  for (let i = 0; i < values.length; i++) {
    values[i] = view.getFloat32(4 * i, true);
  }
  return {
    nx: p.nx,
    ny: p.ny,
    resolution: p.resolution,
    origin: [p.origin[0], p.origin[1]],
    theta: p.theta,
    values,
    receivedAt: now,
  };
}

// ---- outbound ------------------------------------------------------------

export type ClientMessage = {
  v: typeof PROTOCOL_VERSION;
  type: "goal" | "spawn_obstacle" | "pause" | "resume" | "set_params";
  seq: number;
  payload: Record<string, unknown>;
};

let outSeq = 0;

/** Test hook: reset the outbound sequence counter. */
export function resetSeq(): void {
  outSeq = 0;
}

function envelope(
  type: ClientMessage["type"],
  payload: Record<string, unknown>,
): ClientMessage {
  outSeq += 1;
  return { v: PROTOCOL_VERSION, type, seq: outSeq, payload };
}

export function goalMessage(x: number, y: number, theta: number): ClientMessage {
  return envelope("goal", { x, y, theta });
}

export function spawnMessage(
  x: number,
  y: number,
  vx: number,
  vy: number,
  radius = 0.15,
): ClientMessage {
  return envelope("spawn_obstacle", {
    shape: { kind: "ellipse", a: radius, b: radius },
    pose: [x, y, 0],
    velocity: [vx, vy],
  });
}

export function pauseMessage(): ClientMessage {
  return envelope("pause", {});
}

export function resumeMessage(): ClientMessage {
  return envelope("resume", {});
}

export function setParamsMessage(
  params: { N?: number; rho?: number; controller?: "mpc" | "dcbf" },
): ClientMessage {
  return envelope("set_params", { ...params });
}

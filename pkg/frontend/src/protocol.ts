/** Wire protocol: frame types, strict parsing, and message encoders.
 *
 * Every displayed value originates from a server frame; the client never
 * computes simulation state of its own.
 */

export type WheelDir = "fwd" | "back" | "stop";
export type CallState = "idle" | "ringing" | "answered";

export interface Pose {
  x: number;
  y: number;
  theta: number;
}

export interface StateFrame {
  type: "state";
  t_ms: number;
  call: CallState;
  est: boolean;
  std: boolean;
  latched: string | null;
  port: string;
  wheels: { left: WheelDir; right: WheelDir };
  pose: Pose;
  energies: { low: number[]; high: number[] };
}

export interface ErrorFrame {
  type: "error";
  code: string;
  detail?: string;
}

export interface HelloFrame {
  type: "hello";
  tick_ms: number;
  broadcast_every: number;
  profile: string;
}

export type ServerFrame = StateFrame | ErrorFrame | HelloFrame;

const WHEEL_DIRS = new Set(["fwd", "back", "stop"]);
const CALL_STATES = new Set(["idle", "ringing", "answered"]);

function isFiniteNumber(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

function isEnergies(v: unknown): v is number[] {
  return Array.isArray(v) && v.length === 4 && v.every(isFiniteNumber);
}

function isHexByte(v: unknown): v is string {
  return typeof v === "string" && /^0x[0-9a-fA-F]{2}$/.test(v);
}

/** Parse one server message; malformed input yields null (caller logs). */
export function parseFrame(raw: string): ServerFrame | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const obj = data as Record<string, unknown>;

  if (obj.type === "error" && typeof obj.code === "string") {
    const frame: ErrorFrame = { type: "error", code: obj.code };
    if (typeof obj.detail === "string") frame.detail = obj.detail;
    return frame;
  }

  if (
    obj.type === "hello" &&
    isFiniteNumber(obj.tick_ms) &&
    isFiniteNumber(obj.broadcast_every) &&
    typeof obj.profile === "string"
  ) {
    return {
      type: "hello",
      tick_ms: obj.tick_ms,
      broadcast_every: obj.broadcast_every,
      profile: obj.profile,
    };
  }

  if (obj.type !== "state") return null;
  const wheels = obj.wheels as Record<string, unknown> | undefined;
  const pose = obj.pose as Record<string, unknown> | undefined;
  const energies = obj.energies as Record<string, unknown> | undefined;
  if (
    !isFiniteNumber(obj.t_ms) ||
    typeof obj.call !== "string" ||
    !CALL_STATES.has(obj.call) ||
    typeof obj.est !== "boolean" ||
    typeof obj.std !== "boolean" ||
    !(obj.latched === null || isHexByte(obj.latched)) ||
    !isHexByte(obj.port) ||
    !wheels ||
    typeof wheels.left !== "string" ||
    typeof wheels.right !== "string" ||
    !WHEEL_DIRS.has(wheels.left) ||
    !WHEEL_DIRS.has(wheels.right) ||
    !pose ||
    !isFiniteNumber(pose.x) ||
    !isFiniteNumber(pose.y) ||
    !isFiniteNumber(pose.theta) ||
    !energies ||
    !isEnergies(energies.low) ||
    !isEnergies(energies.high)
  ) {
    return null;
  }
  return {
    type: "state",
    t_ms: obj.t_ms,
    call: obj.call as CallState,
    est: obj.est,
    std: obj.std,
    latched: obj.latched as string | null,
    port: obj.port as string,
    wheels: { left: wheels.left as WheelDir, right: wheels.right as WheelDir },
    pose: { x: pose.x as number, y: pose.y as number, theta: pose.theta as number },
    energies: { low: energies.low as number[], high: energies.high as number[] },
  };
}

export function encodeKeyDown(key: string): string {
  return JSON.stringify({ type: "key_down", key });
}

export function encodeKeyUp(): string {
  return JSON.stringify({ type: "key_up" });
}

export function encodeReset(): string {
  return JSON.stringify({ type: "reset" });
}

/** "0x0A" -> "1010"; null stays null (placeholder rendering). */
export function bitsOfHex(hex: string | null): string | null {
  if (hex === null) return null;
  const value = Number.parseInt(hex, 16);
  if (Number.isNaN(value) || value < 0 || value > 15) return null;
  return value.toString(2).padStart(4, "0");
}

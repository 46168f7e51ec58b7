/** Client view state: the latest frame plus a bounded pose trail.
 *
 * Rendering never mutates received frames; the trail stores copies.
 */

import type { StateFrame } from "./protocol.js";

export type Connection = "connecting" | "open" | "closed";

export interface TrailPoint {
  x: number;
  y: number;
}

export interface UiState {
  connection: Connection;
  lastFrame: StateFrame | null;
  trail: TrailPoint[];
  trailCap: number;
  pressedKey: string | null;
  lastError: string | null;
}

export const DEFAULT_TRAIL_CAP = 2000;

export function initialState(trailCap: number = DEFAULT_TRAIL_CAP): UiState {
  return {
    connection: "connecting",
    lastFrame: null,
    trail: [],
    trailCap,
    pressedKey: null,
    lastError: null,
  };
}

/** Fold a state frame into the view: replaces lastFrame, extends the trail. */
export function applyFrame(state: UiState, frame: StateFrame): void {
  state.lastFrame = frame;
  const last = state.trail[state.trail.length - 1];
  if (!last || last.x !== frame.pose.x || last.y !== frame.pose.y) {
    state.trail.push({ x: frame.pose.x, y: frame.pose.y });
    if (state.trail.length > state.trailCap) {
      state.trail.splice(0, state.trail.length - state.trailCap);
    }
  }
}

export function clearTrail(state: UiState): void {
  state.trail.length = 0;
}

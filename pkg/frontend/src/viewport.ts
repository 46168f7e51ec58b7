/** Top-down canvas view: grid, pose trail, and the vehicle marker. */

import type { StateFrame } from "./protocol.js";
import type { TrailPoint } from "./state.js";

const SCALE = 220; // pixels per meter
const GRID_M = 0.25;

export function drawViewport(
  canvas: HTMLCanvasElement,
  frame: StateFrame | null,
  trail: TrailPoint[],
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const w = canvas.width;
  const h = canvas.height;
  ctx.fillStyle = "#10141a";
  ctx.fillRect(0, 0, w, h);

  const cx = frame ? frame.pose.x : 0;
  const cy = frame ? frame.pose.y : 0;
  const toPx = (x: number, y: number): [number, number] => [
    w / 2 + (x - cx) * SCALE,
    h / 2 - (y - cy) * SCALE,
  ];

  // grid
  ctx.strokeStyle = "#222a33";
  ctx.lineWidth = 1;
  const spanX = w / SCALE / 2 + GRID_M;
  const spanY = h / SCALE / 2 + GRID_M;
  const x0 = Math.floor((cx - spanX) / GRID_M) * GRID_M;
  const y0 = Math.floor((cy - spanY) / GRID_M) * GRID_M;
  for (let gx = x0; gx <= cx + spanX; gx += GRID_M) {
    const [px] = toPx(gx, 0);
    ctx.beginPath();
    ctx.moveTo(px, 0);
    ctx.lineTo(px, h);
    ctx.stroke();
  }
  for (let gy = y0; gy <= cy + spanY; gy += GRID_M) {
    const [, py] = toPx(0, gy);
    ctx.beginPath();
    ctx.moveTo(0, py);
    ctx.lineTo(w, py);
    ctx.stroke();
  }

  // origin cross
  const [ox, oy] = toPx(0, 0);
  ctx.strokeStyle = "#39424d";
  ctx.beginPath();
  ctx.moveTo(ox - 8, oy);
  ctx.lineTo(ox + 8, oy);
  ctx.moveTo(ox, oy - 8);
  ctx.lineTo(ox, oy + 8);
  ctx.stroke();

  // trail
  if (trail.length > 1) {
    ctx.strokeStyle = "#2f81f7";
    ctx.lineWidth = 2;
    ctx.beginPath();
    const [sx, sy] = toPx(trail[0].x, trail[0].y);
    ctx.moveTo(sx, sy);
    for (const p of trail) {
      const [px, py] = toPx(p.x, p.y);
      ctx.lineTo(px, py);
    }
    ctx.stroke();
  }

  // vehicle marker
  if (frame) {
    const { x, y, theta } = frame.pose;
    const nose = toPx(x + 0.06 * Math.cos(theta), y + 0.06 * Math.sin(theta));
    const left = toPx(
      x + 0.035 * Math.cos(theta + (2.5 * Math.PI) / 3),
      y + 0.035 * Math.sin(theta + (2.5 * Math.PI) / 3),
    );
    const right = toPx(
      x + 0.035 * Math.cos(theta - (2.5 * Math.PI) / 3),
      y + 0.035 * Math.sin(theta - (2.5 * Math.PI) / 3),
    );
    ctx.fillStyle = "#e3b341";
    ctx.beginPath();
    ctx.moveTo(nose[0], nose[1]);
    ctx.lineTo(left[0], left[1]);
    ctx.lineTo(right[0], right[1]);
    ctx.closePath();
    ctx.fill();
  }
}

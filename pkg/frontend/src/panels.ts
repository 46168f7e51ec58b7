/** Telemetry panels: energy bars, detector lamps, code and port readouts. */

import { bitsOfHex, type StateFrame } from "./protocol.js";

const PLACEHOLDER = "—"; // em dash shown while nothing is latched

export interface PanelRefs {
  lowBars: HTMLElement[];
  highBars: HTMLElement[];
  estLamp: HTMLElement;
  stdLamp: HTMLElement;
  codeBits: HTMLElement;
  codeHex: HTMLElement;
  port: HTMLElement;
  wheels: HTMLElement;
  pose: HTMLElement;
  call: HTMLElement;
}

export function formatPose(frame: StateFrame): string {
  const { x, y, theta } = frame.pose;
  return `x ${x.toFixed(3)} m   y ${y.toFixed(3)} m   θ ${theta.toFixed(2)} rad`;
}

export function formatWheels(frame: StateFrame): string {
  return `L ${frame.wheels.left}  R ${frame.wheels.right}`;
}

/** Bar height fraction for an energy value (soft scale, clamped to 1). */
export function barFraction(energy: number): number {
  return Math.max(0, Math.min(1, energy / 0.12));
}

export function renderPanels(refs: PanelRefs, frame: StateFrame): void {
  frame.energies.low.forEach((e, i) => {
    refs.lowBars[i].style.height = `${barFraction(e) * 100}%`;
  });
  frame.energies.high.forEach((e, i) => {
    refs.highBars[i].style.height = `${barFraction(e) * 100}%`;
  });
  refs.estLamp.classList.toggle("on", frame.est);
  refs.stdLamp.classList.toggle("on", frame.std);
  refs.codeBits.textContent = bitsOfHex(frame.latched) ?? PLACEHOLDER;
  refs.codeHex.textContent = frame.latched ?? PLACEHOLDER;
  refs.port.textContent = frame.port;
  refs.wheels.textContent = formatWheels(frame);
  refs.pose.textContent = formatPose(frame);
  refs.call.textContent = frame.call;
}

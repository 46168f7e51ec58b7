/** Console wiring: socket lifecycle, keypad DOM, render loop. */

import { KEYPAD_LAYOUT, COMMAND_KEYS, KeypadController } from "./keypad.js";
import { encodeReset, parseFrame } from "./protocol.js";
import { applyFrame, clearTrail, initialState } from "./state.js";
import { drawViewport } from "./viewport.js";
import { renderPanels, type PanelRefs } from "./panels.js";

const RECONNECT_DELAY_MS = 1500;

const state = initialState();
let socket: WebSocket | null = null;
let needsRedraw = true;

function wsUrl(): string {
  const scheme = location.protocol === "https:" ? "wss:" : "ws:";
  return `${scheme}//${location.host}/ws`;
}

function sendRaw(message: string): boolean {
  if (!socket || socket.readyState !== WebSocket.OPEN) {
    showBanner("disconnected: input dropped");
    return false;
  }
  socket.send(message);
  return true;
}

const keypad = new KeypadController(sendRaw, (key) => {
  state.pressedKey = key;
  document.querySelectorAll<HTMLButtonElement>(".keypad button").forEach((btn) => {
    btn.classList.toggle("active", btn.dataset.key === key);
  });
});

function showBanner(text: string | null): void {
  const banner = document.getElementById("banner") as HTMLElement;
  banner.textContent = text ?? "";
  banner.style.display = text ? "block" : "none";
}

function connect(): void {
  state.connection = "connecting";
  showBanner("connecting…");
  const ws = new WebSocket(wsUrl());
  socket = ws;
  ws.onopen = () => {
    state.connection = "open";
    showBanner(null);
  };
  ws.onmessage = (event: MessageEvent) => {
    const frame = parseFrame(String(event.data));
    if (frame === null) {
      console.warn("malformed frame ignored", event.data);
      return;
    }
    if (frame.type === "state") {
      applyFrame(state, frame);
      needsRedraw = true;
    } else if (frame.type === "error") {
      if (frame.code === "busy") {
        showBanner("server busy: another session is active");
      } else {
        console.warn("server error frame", frame);
      }
    } else {
      const profile = document.getElementById("profile");
      if (profile) profile.textContent = frame.profile;
    }
  };
  ws.onclose = () => {
    if (socket !== ws) return;
    socket = null;
    state.connection = "closed";
    keypad.cancel();
    showBanner("disconnected: retrying…");
    setTimeout(connect, RECONNECT_DELAY_MS);
  };
}

function buildKeypad(): void {
  const container = document.querySelector(".keypad") as HTMLElement;
  for (const row of KEYPAD_LAYOUT) {
    for (const key of row) {
      const btn = document.createElement("button");
      btn.textContent = key;
      btn.dataset.key = key;
      if (COMMAND_KEYS.has(key)) btn.classList.add("command");
      btn.addEventListener("pointerdown", (ev) => {
        ev.preventDefault();
        keypad.press(key);
      });
      btn.addEventListener("pointerup", () => keypad.release());
      btn.addEventListener("pointercancel", () => keypad.cancel());
      btn.addEventListener("pointerleave", () => keypad.cancel());
      container.appendChild(btn);
    }
  }
  window.addEventListener("pointerup", () => keypad.release());
  window.addEventListener("blur", () => keypad.cancel());

  document.addEventListener("keydown", (ev) => {
    if (ev.repeat) return;
    if (COMMAND_KEYS.has(ev.key)) keypad.press(ev.key);
  });
  document.addEventListener("keyup", (ev) => {
    if (keypad.activeKey === ev.key) keypad.release();
  });

  (document.getElementById("reset") as HTMLButtonElement).addEventListener(
    "click",
    () => {
      if (sendRaw(encodeReset())) {
        clearTrail(state);
        needsRedraw = true;
      }
    },
  );
}

function panelRefs(): PanelRefs {
  const bars = (group: string): HTMLElement[] =>
    Array.from(document.querySelectorAll(`#${group} .bar-fill`));
  return {
    lowBars: bars("low-bars"),
    highBars: bars("high-bars"),
    estLamp: document.getElementById("est-lamp") as HTMLElement,
    stdLamp: document.getElementById("std-lamp") as HTMLElement,
    codeBits: document.getElementById("code-bits") as HTMLElement,
    codeHex: document.getElementById("code-hex") as HTMLElement,
    port: document.getElementById("port") as HTMLElement,
    wheels: document.getElementById("wheels") as HTMLElement,
    pose: document.getElementById("pose") as HTMLElement,
    call: document.getElementById("call") as HTMLElement,
  };
}

function start(): void {
  buildKeypad();
  const refs = panelRefs();
  const canvas = document.getElementById("viewport") as HTMLCanvasElement;

  const tick = () => {
    if (needsRedraw) {
      needsRedraw = false;
      drawViewport(canvas, state.lastFrame, state.trail);
      if (state.lastFrame) renderPanels(refs, state.lastFrame);
    }
    requestAnimationFrame(tick);
  };
  requestAnimationFrame(tick);
  connect();
}

document.addEventListener("DOMContentLoaded", start);

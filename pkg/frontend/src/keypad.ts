/** Keypad press logic, separated from the DOM so it is unit-testable.
 *
 * A phone keypad is single-key: pressing a second key releases the first.
 * Pointer cancel and leave always release, so no key can stick. Sends go
 * through a callback that reports whether the message was actually sent
 * (false while disconnected; the UI shows a banner in that case).
 */

import { encodeKeyDown, encodeKeyUp } from "./protocol.js";

export const KEYPAD_LAYOUT: string[][] = [
  ["1", "2", "3", "A"],
  ["4", "5", "6", "B"],
  ["7", "8", "9", "C"],
  ["*", "0", "#", "D"],
];

export const COMMAND_KEYS = new Set(["2", "4", "5", "6", "8"]);

export type SendFn = (message: string) => boolean;
export type KeyListener = (key: string | null) => void;

export class KeypadController {
  private active: string | null = null;

  constructor(
    private readonly send: SendFn,
    private readonly onChange: KeyListener = () => {},
  ) {}

  get activeKey(): string | null {
    return this.active;
  }

  press(key: string): void {
    if (this.active === key) return;
    if (this.active !== null) {
      this.release();
    }
    if (this.send(encodeKeyDown(key))) {
      this.active = key;
      this.onChange(key);
    }
  }

  release(): void {
    if (this.active === null) return;
    this.send(encodeKeyUp());
    this.active = null;
    this.onChange(null);
  }

  /** Pointer cancel / leave / blur: never leave a key stuck down. */
  cancel(): void {
    this.release();
  }
}

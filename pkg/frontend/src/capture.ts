/**
 * Keystroke capture: keydown -> press, keyup -> release.
 *
 * Auto-repeat keydowns (no interleaved keyup) are suppressed after the
 * first. Only the message textarea should ever be instrumented; password
 * fields and IME composition never produce frames. While disconnected,
 * frames buffer up to a cap with drop-oldest, and the buffer flushes once
 * on reconnect (already-sent history is never replayed).
 */

import { KeyEventFrame } from "./protocol.js";

export const CAPTURE_BUFFER_CAP = 1000;

const NAMED_KEYS = new Set([
  "Backspace",
  "Enter",
  "Shift",
  "Tab",
  "CapsLock",
  "ArrowUp",
  "ArrowDown",
  "ArrowLeft",
  "ArrowRight",
]);

/** Normalize a DOM KeyboardEvent.key to the wire token. */
export function keyToken(domKey: string): string {
  if (domKey === " ") return "Space";
  if (domKey.length === 1) return domKey;
  if (NAMED_KEYS.has(domKey)) return domKey;
  return "Other";
}

/** The subset of KeyboardEvent the capture logic needs (testable shape). */
export interface KeyInput {
  key: string;
  repeat?: boolean;
  isComposing?: boolean;
}

export interface CaptureOptions {
  /** Monotonic high-resolution clock in ms; performance.now in browsers. */
  clock?: () => number;
  send: (frame: KeyEventFrame) => void;
  connected?: () => boolean;
  bufferCap?: number;
}

export class KeystrokeCapture {
  private readonly clock: () => number;
  private readonly send: (frame: KeyEventFrame) => void;
  private readonly connected: () => boolean;
  private readonly cap: number;
  private readonly held = new Set<string>();
  private readonly pendingWhileOffline: KeyEventFrame[] = [];
  private lastT = 0;
  droppedWhileOffline = 0;

  constructor(options: CaptureOptions) {
    this.clock = options.clock ?? (() => performance.now());
    this.send = options.send;
    this.connected = options.connected ?? (() => true);
    this.cap = options.bufferCap ?? CAPTURE_BUFFER_CAP;
  }

  keydown(input: KeyInput): void {
    if (input.isComposing) return;
    const token = keyToken(input.key);
    // both the browser's repeat flag and our own held-set suppress repeats
    if (input.repeat || this.held.has(token)) return;
    this.held.add(token);
    this.emit(token, "press");
  }

  keyup(input: KeyInput): void {
    if (input.isComposing) return;
    const token = keyToken(input.key);
    if (!this.held.has(token)) return; // never emit an orphan release
    this.held.delete(token);
    this.emit(token, "release");
  }

  /** Flush events buffered during a disconnect; call on reconnect. */
  flush(): void {
    while (this.pendingWhileOffline.length) {
      const frame = this.pendingWhileOffline.shift()!;
      this.send(frame);
    }
  }

  private emit(key: string, action: "press" | "release"): void {
    this.lastT = Math.max(this.clock(), this.lastT); // frames never go backwards
    const frame: KeyEventFrame = { type: "key_event", key, action, t_ms: this.lastT };
    if (this.connected()) {
      this.send(frame);
      return;
    }
    if (this.pendingWhileOffline.length >= this.cap) {
      this.pendingWhileOffline.shift();
      this.droppedWhileOffline += 1;
    }
    this.pendingWhileOffline.push(frame);
  }
}

/**
 * Wire a capture instance to a textarea. This is the only element that
 * gets instrumented; anything else on the page stays untouched.
 */
export function attachToTextarea(capture: KeystrokeCapture, textarea: HTMLTextAreaElement): () => void {
  const down = (e: KeyboardEvent) =>
    capture.keydown({ key: e.key, repeat: e.repeat, isComposing: e.isComposing });
  const up = (e: KeyboardEvent) =>
    capture.keyup({ key: e.key, isComposing: e.isComposing });
  textarea.addEventListener("keydown", down);
  textarea.addEventListener("keyup", up);
  return () => {
    textarea.removeEventListener("keydown", down);
    textarea.removeEventListener("keyup", up);
  };
}

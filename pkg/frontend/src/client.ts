/**
 * Chat client: joins a session, pumps frames both ways, reconnects with
 * exponential backoff. Keystroke history is never re-sent on reconnect;
 * only frames that were buffered while offline flush once.
 */

import { ClientFrame, LineDecoder, Role, ServerFrame, encodeFrame } from "./protocol.js";

export interface Socket {
  send(data: string): void;
  close(): void;
}

export interface Transport {
  connect(handlers: {
    onOpen: () => void;
    onData: (chunk: string) => void;
    onClose: () => void;
  }): Socket;
}

export function backoffDelayMs(attempt: number, baseMs = 500, capMs = 30_000): number {
  return Math.min(baseMs * 2 ** attempt, capMs);
}

/** Browser transport: WebSocket carrying the NDJSON frames as messages. */
export class WebSocketTransport implements Transport {
  constructor(private readonly url: string) {}

  connect(handlers: {
    onOpen: () => void;
    onData: (chunk: string) => void;
    onClose: () => void;
  }): Socket {
    const ws = new WebSocket(this.url);
    ws.onopen = handlers.onOpen;
    ws.onmessage = (event) => handlers.onData(String(event.data));
    ws.onclose = handlers.onClose;
    return {
      send: (data) => ws.send(data),
      close: () => ws.close(),
    };
  }
}

export interface ChatClientOptions {
  transport: Transport;
  sessionId: string;
  role: Role;
  userId: string;
  onFrame: (frame: ServerFrame) => void;
  onStatus?: (connected: boolean) => void;
  scheduler?: (fn: () => void, delayMs: number) => void;
}

export class ChatClient {
  private socket: Socket | null = null;
  private joined = false;
  private attempts = 0;
  private decoder = new LineDecoder();
  private stopped = false;
  private readonly options: ChatClientOptions;
  private readonly schedule: (fn: () => void, delayMs: number) => void;
  /** Fires after every successful join; the app flushes offline buffers here. */
  onJoined: (() => void) | null = null;

  constructor(options: ChatClientOptions) {
    this.options = options;
    this.schedule = options.scheduler ?? ((fn, ms) => setTimeout(fn, ms));
  }

  get connected(): boolean {
    return this.joined;
  }

  start(): void {
    this.stopped = false;
    this.open();
  }

  stop(): void {
    this.stopped = true;
    this.socket?.close();
    this.socket = null;
    this.joined = false;
  }

  send(frame: ClientFrame): void {
    this.socket?.send(encodeFrame(frame));
  }

  private open(): void {
    this.decoder = new LineDecoder();
    this.socket = this.options.transport.connect({
      onOpen: () => {
        this.attempts = 0;
        this.send({
          type: "join",
          session_id: this.options.sessionId,
          role: this.options.role,
          user_id: this.options.userId,
        });
      },
      onData: (chunk) => {
        for (const frame of this.decoder.push(chunk)) {
          if (frame.type === "joined") {
            this.joined = true;
            this.options.onStatus?.(true);
            this.onJoined?.();
          }
          this.options.onFrame(frame);
        }
      },
      onClose: () => {
        this.joined = false;
        this.socket = null;
        this.options.onStatus?.(false);
        if (this.stopped) return;
        const delay = backoffDelayMs(this.attempts++);
        this.schedule(() => this.open(), delay);
      },
    });
  }
}

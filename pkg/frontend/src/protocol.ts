/**
 * Wire protocol types and newline-delimited JSON framing.
 *
 * The shapes here mirror docs/wire-protocol.md field for field; the
 * server rejects anything else.
 */

export type Role = "client" | "responder" | "supervisor";

export interface JoinFrame {
  type: "join";
  session_id: string;
  role: Role;
  user_id: string;
}

export interface KeyEventFrame {
  type: "key_event";
  key: string;
  action: "press" | "release";
  t_ms: number;
}

export interface ChatSendFrame {
  type: "chat_message";
  text: string;
  client_msg_id: string;
}

export type ClientFrame = JoinFrame | KeyEventFrame | ChatSendFrame;

export interface JoinedFrame {
  type: "joined";
  session_id: string;
  role: Role;
}

export interface ChatMessageFrame {
  type: "chat_message";
  message_id: string;
  sender_role: "client" | "responder";
  text: string;
  ts: number;
}

export interface EmotionLabel {
  label: string;
  confidence: number;
}

export interface EmotionUpdateFrame {
  type: "emotion_update";
  message_id: string;
  valence: -1 | 0 | 1;
  arousal: -1 | 0 | 1;
  labels: EmotionLabel[];
  source: "kd" | "text" | "fusion";
  degraded: boolean;
}

export interface ErrorFrame {
  type: "error";
  code: string;
  detail: string;
}

export type ServerFrame = JoinedFrame | ChatMessageFrame | EmotionUpdateFrame | ErrorFrame;

export function encodeFrame(frame: ClientFrame): string {
  return JSON.stringify(frame) + "\n";
}

/** Accumulates stream chunks and yields one parsed frame per line. */
export class LineDecoder {
  private buffer = "";

  push(chunk: string): ServerFrame[] {
    this.buffer += chunk;
    const frames: ServerFrame[] = [];
    let idx: number;
    while ((idx = this.buffer.indexOf("\n")) >= 0) {
      const line = this.buffer.slice(0, idx).trim();
      this.buffer = this.buffer.slice(idx + 1);
      if (!line) continue;
      try {
        frames.push(JSON.parse(line) as ServerFrame);
      } catch {
        console.warn("emochat: dropping unparseable frame", line.slice(0, 120));
      }
    }
    return frames;
  }
}

/**
 * Browser entry: wires the transport, keystroke capture, chat pane,
 * emotion badges, and (for supervisors) the valence/arousal sparklines.
 */

import { BadgeStore, badgeText } from "./badges.js";
import { KeystrokeCapture, attachToTextarea } from "./capture.js";
import { ChatClient, WebSocketTransport } from "./client.js";
import { Role, ServerFrame } from "./protocol.js";
import { ScaleHistory, sparklinePath } from "./sparkline.js";

interface AppConfig {
  url: string;
  sessionId: string;
  role: Role;
  userId: string;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

export function startApp(config: AppConfig): void {
  const log = el<HTMLDivElement>("chat-log");
  const textarea = el<HTMLTextAreaElement>("composer");
  const status = el<HTMLSpanElement>("status");
  const sparkline = document.getElementById("sparkline") as SVGPathElement | null;

  const badges = new BadgeStore({ viewerRole: config.role });
  const valenceHistory = new ScaleHistory();
  let clientMsgSeq = 0;

  const client = new ChatClient({
    transport: new WebSocketTransport(config.url),
    sessionId: config.sessionId,
    role: config.role,
    userId: config.userId,
    onFrame: handleFrame,
    onStatus: (connected) => {
      status.textContent = connected ? "connected" : "reconnecting…";
      status.className = connected ? "on" : "off";
    },
  });

  const capture = new KeystrokeCapture({
    send: (frame) => client.send(frame),
    connected: () => client.connected,
  });
  client.onJoined = () => capture.flush();
  if (config.role !== "supervisor") attachToTextarea(capture, textarea);

  function handleFrame(frame: ServerFrame): void {
    if (frame.type === "chat_message") {
      badges.addMessage(frame);
      const bubble = document.createElement("div");
      bubble.className = `bubble ${frame.sender_role}`;
      bubble.dataset.messageId = frame.message_id;
      bubble.textContent = `${frame.sender_role}: ${frame.text}`;
      const slot = document.createElement("span");
      slot.className = "badge";
      bubble.appendChild(slot);
      log.appendChild(bubble);
      log.scrollTop = log.scrollHeight;
    } else if (frame.type === "emotion_update") {
      const badge = badges.applyUpdate(frame);
      if (!badge) return;
      const bubble = log.querySelector(`[data-message-id="${frame.message_id}"] .badge`);
      if (bubble) bubble.textContent = badgeText(badge);
      if (sparkline) {
        valenceHistory.push(frame.valence);
        sparkline.setAttribute("d", sparklinePath(valenceHistory.recent()));
      }
    } else if (frame.type === "error") {
      console.warn("emochat server error:", frame.code, frame.detail);
    }
  }

  textarea.addEventListener("keydown", (e) => {
    if (e.key === "Enter" && !e.shiftKey) {
      e.preventDefault();
      const text = textarea.value.trim();
      if (!text) return;
      client.send({
        type: "chat_message",
        text,
        client_msg_id: `${config.userId}-${clientMsgSeq++}`,
      });
      textarea.value = "";
    }
  });

  client.start();
}

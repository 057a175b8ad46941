/**
 * Emotion badge state: what gets rendered beside a message bubble.
 *
 * Updates are idempotent, capped at three chips, and only apply to
 * messages whose bubble already exists; unknown message ids are ignored
 * with a console note. The client role renders no badges by default.
 */

import { ChatMessageFrame, EmotionUpdateFrame, Role } from "./protocol.js";

export interface BadgeChip {
  label: string;
  percent: number; // whole percent
}

export interface EmotionBadge {
  messageId: string;
  valenceGlyph: "-" | "0" | "+";
  arousalGlyph: "-" | "0" | "+";
  chips: BadgeChip[];
  degraded: boolean;
  source: string;
}

const GLYPH: Record<number, "-" | "0" | "+"> = { [-1]: "-", 0: "0", 1: "+" };

export function badgeFromUpdate(frame: EmotionUpdateFrame): EmotionBadge {
  return {
    messageId: frame.message_id,
    valenceGlyph: GLYPH[frame.valence],
    arousalGlyph: GLYPH[frame.arousal],
    chips: frame.labels.slice(0, 3).map((l) => ({
      label: l.label,
      percent: Math.round(l.confidence * 100),
    })),
    degraded: frame.degraded,
    source: frame.source,
  };
}

export interface BadgeStoreOptions {
  viewerRole: Role;
  /** Override the default "clients see nothing" policy. */
  showOwnEmotions?: boolean;
}

export class BadgeStore {
  private readonly bubbles = new Map<string, ChatMessageFrame>();
  private readonly badges = new Map<string, EmotionBadge>();
  private readonly options: BadgeStoreOptions;

  constructor(options: BadgeStoreOptions) {
    this.options = options;
  }

  /** Register a rendered message bubble; badges may only follow these. */
  addMessage(frame: ChatMessageFrame): void {
    this.bubbles.set(frame.message_id, frame);
  }

  /**
   * Apply an emotion update. Returns the badge when it should render,
   * null when the update was ignored (unknown id or hidden for the role).
   */
  applyUpdate(frame: EmotionUpdateFrame): EmotionBadge | null {
    if (!this.bubbles.has(frame.message_id)) {
      console.info("emochat: emotion_update for unknown message", frame.message_id);
      return null;
    }
    if (this.options.viewerRole === "client" && !this.options.showOwnEmotions) {
      return null;
    }
    const badge = badgeFromUpdate(frame);
    this.badges.set(frame.message_id, badge); // duplicate updates collapse
    return badge;
  }

  badgeFor(messageId: string): EmotionBadge | undefined {
    return this.badges.get(messageId);
  }

  get badgeCount(): number {
    return this.badges.size;
  }
}

/** Plain-text rendering used by the default DOM view and the tests. */
export function badgeText(badge: EmotionBadge): string {
  const chips = badge.chips.map((c) => `${c.label} ${c.percent}%`).join(" | ");
  const degraded = badge.degraded ? " [degraded]" : "";
  return `v:${badge.valenceGlyph} a:${badge.arousalGlyph} ${chips}${degraded}`;
}

"""Shared domain types: key events, messages, annotations, predictions.

Also owns the two stream-level operations every other module builds on:
validating a raw press/release stream and segmenting it into per-message
windows.
"""

from __future__ import annotations

from dataclasses import dataclass

# Canonical category order. Used everywhere a fixed ordering matters
# (indicator encodings, report columns, tie-breaking).
CATEGORIES: tuple[str, ...] = (
    "neutral",
    "happiness",
    "sadness",
    "disgust",
    "fear",
    "surprise",
    "anger",
)

ROLES: tuple[str, ...] = ("client", "responder", "supervisor")

NAMED_KEYS: frozenset[str] = frozenset(
    {
        "Backspace",
        "Enter",
        "Shift",
        "Space",
        "Tab",
        "CapsLock",
        "ArrowUp",
        "ArrowDown",
        "ArrowLeft",
        "ArrowRight",
        "Other",
    }
)

MAX_MESSAGE_CODEPOINTS = 10_000

# A backwards jump larger than this is a genuine clock reset, not jitter.
CLOCK_RESET_THRESHOLD_MS = 5_000.0

# Sort rank so a press at time t orders before a release at the same t.
_ACTION_RANK = {"press": 0, "release": 1}


class EmochatError(Exception):
    """Base class for all library errors."""


class NonMonotonicClock(EmochatError):
    """Timestamps jumped backwards by more than the reset threshold."""


def _valid_key(key: str) -> bool:
    return (len(key) == 1 and key.isprintable()) or key in NAMED_KEYS


@dataclass(frozen=True, slots=True)
class KeyEvent:
    """One press or release, timestamped on the sender's monotonic clock."""

    session_id: str
    user_id: str
    key: str
    action: str  # "press" | "release"
    t_ms: float

    def __post_init__(self) -> None:
        if self.action not in _ACTION_RANK:
            raise ValueError(f"action must be press|release, got {self.action!r}")
        if not self.key or not _valid_key(self.key):
            raise ValueError(f"invalid key token {self.key!r}")
        if self.t_ms < 0:
            raise ValueError(f"t_ms must be >= 0, got {self.t_ms}")


@dataclass(frozen=True, slots=True)
class ChatMessage:
    message_id: str
    session_id: str
    sender_role: str  # "client" | "responder"
    text: str
    sent_at_ms: float

    def __post_init__(self) -> None:
        if self.sender_role not in ("client", "responder"):
            raise ValueError(f"sender_role must be client|responder, got {self.sender_role!r}")
        if len(self.text) > MAX_MESSAGE_CODEPOINTS:
            raise ValueError(f"text exceeds {MAX_MESSAGE_CODEPOINTS} code points")


@dataclass(frozen=True, slots=True)
class MessageEventWindow:
    """The key events that composed one message, in nondecreasing time order."""

    message_id: str
    events: tuple[KeyEvent, ...]

    def __post_init__(self) -> None:
        for a, b in zip(self.events, self.events[1:]):
            if b.t_ms < a.t_ms:
                raise ValueError("window events must be ordered by t_ms")


def _check_labels(labels: tuple[str, ...], allow_empty: bool) -> None:
    if len(labels) > 3:
        raise ValueError("at most 3 labels")
    if not allow_empty and not labels:
        raise ValueError("at least 1 label required")
    if len(set(labels)) != len(labels):
        raise ValueError("labels must be distinct")
    for lab in labels:
        if lab not in CATEGORIES:
            raise ValueError(f"unknown category {lab!r}")


def _check_scale(name: str, value: int) -> None:
    if value not in (-1, 0, 1):
        raise ValueError(f"{name} must be in {{-1,0,1}}, got {value}")


@dataclass(frozen=True, slots=True)
class EmotionAnnotation:
    """A human (or gold) label: valence/arousal on -1/0/1 plus 1-3 categories."""

    message_id: str
    valence: int
    arousal: int
    labels: tuple[str, ...]
    annotator_id: str

    def __post_init__(self) -> None:
        _check_scale("valence", self.valence)
        _check_scale("arousal", self.arousal)
        _check_labels(self.labels, allow_empty=False)


@dataclass(frozen=True, slots=True)
class EmotionPrediction:
    """Model output for one message, with per-target confidences."""

    message_id: str
    valence: int
    valence_confidence: float
    arousal: int
    arousal_confidence: float
    labels: tuple[tuple[str, float], ...]  # (category, confidence), confidence desc
    source: str  # "kd" | "text" | "fusion"

    def __post_init__(self) -> None:
        _check_scale("valence", self.valence)
        _check_scale("arousal", self.arousal)
        if self.source not in ("kd", "text", "fusion"):
            raise ValueError(f"source must be kd|text|fusion, got {self.source!r}")
        names = tuple(name for name, _ in self.labels)
        _check_labels(names, allow_empty=True)
        for _, conf in self.labels:
            if not 0.0 <= conf <= 1.0:
                raise ValueError("label confidence must be in [0,1]")
        confs = [conf for _, conf in self.labels]
        if confs != sorted(confs, reverse=True):
            raise ValueError("labels must be sorted by confidence descending")
        for conf in (self.valence_confidence, self.arousal_confidence):
            if not 0.0 <= conf <= 1.0:
                raise ValueError("confidence must be in [0,1]")


@dataclass(frozen=True, slots=True)
class ValidatedStream:
    """Cleaned event stream plus counters for what cleaning removed/closed."""

    events: tuple[KeyEvent, ...]
    orphan_count: int = 0
    unclosed_press_count: int = 0


def validate_event_stream(events: list[KeyEvent] | tuple[KeyEvent, ...]) -> ValidatedStream:
    """Sort, drop orphan releases, and count unreleased presses.

    Small timestamp regressions (clock jitter) are reordered silently; a
    backwards jump of more than CLOCK_RESET_THRESHOLD_MS in the incoming
    order raises NonMonotonicClock. Orphan releases (no earlier matching
    press) are removed and counted. Presses left unreleased at the end of
    the stream are kept (they close with dwell 0 downstream) and counted.
    """
    for prev, cur in zip(events, events[1:]):
        if prev.t_ms - cur.t_ms > CLOCK_RESET_THRESHOLD_MS:
            raise NonMonotonicClock(
                f"t_ms jumped back {prev.t_ms - cur.t_ms:.0f} ms (from {prev.t_ms} to {cur.t_ms})"
            )

    # Canonical order: ties broken by action then key, so any permutation
    # of equal-timestamp events validates to the same stream.
    ordered = sorted(events, key=lambda e: (e.t_ms, _ACTION_RANK[e.action], e.key))

    open_presses: dict[str, int] = {}
    kept: list[KeyEvent] = []
    orphans = 0
    for ev in ordered:
        if ev.action == "press":
            open_presses[ev.key] = open_presses.get(ev.key, 0) + 1
            kept.append(ev)
        else:
            pending = open_presses.get(ev.key, 0)
            if pending == 0:
                orphans += 1
                continue
            open_presses[ev.key] = pending - 1
            kept.append(ev)

    unclosed = sum(open_presses.values())
    return ValidatedStream(events=tuple(kept), orphan_count=orphans, unclosed_press_count=unclosed)


def segment_by_message(
    stream: ValidatedStream,
    send_times: list[tuple[str, float]],
) -> tuple[list[MessageEventWindow], list[KeyEvent]]:
    """Partition a validated stream into per-message windows.

    Each event goes to the earliest message whose send time is >= the
    event's t_ms. The Enter release that follows a send-triggering Enter
    press stays with the sent message even if it lands after the send
    time. Events after the last send are returned as the held-over tail.
    """
    for (_, a), (_, b) in zip(send_times, send_times[1:]):
        if b <= a:
            raise ValueError("send_times must be strictly increasing in t_ms")

    buckets: list[list[KeyEvent]] = [[] for _ in send_times]
    tail: list[KeyEvent] = []
    cut_times = [t for _, t in send_times]

    def bucket_for(t_ms: float) -> int:
        # earliest send with send_t >= t_ms; len(cut_times) means the tail
        for i, cut in enumerate(cut_times):
            if t_ms <= cut:
                return i
        return len(cut_times)

    # Track where each open Enter press landed so its release follows it.
    enter_press_bucket: list[int] = []
    for ev in stream.events:
        idx = bucket_for(ev.t_ms)
        if ev.key == "Enter":
            if ev.action == "press":
                enter_press_bucket.append(idx)
            elif enter_press_bucket:
                idx = enter_press_bucket.pop(0)
        if idx == len(cut_times):
            tail.append(ev)
        else:
            buckets[idx].append(ev)

    windows = [
        MessageEventWindow(
            message_id=mid,
            events=tuple(sorted(evs, key=lambda e: (e.t_ms, _ACTION_RANK[e.action], e.key))),
        )
        for (mid, _), evs in zip(send_times, buckets)
    ]
    return windows, tail

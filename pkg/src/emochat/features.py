"""Keystroke-dynamics and message-content features.

The canonical 33-dimension contract lives here: 20 timing/typing dims
followed by 13 content dims. Column order in every export matches
FEATURE_NAMES; see docs/feature-dictionary.md for the definitions.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass, fields

import numpy as np

from .core import ChatMessage, KeyEvent, MessageEventWindow

DEFAULT_PAUSE_THRESHOLD_MS = 1_000.0

KD_FEATURE_NAMES: tuple[str, ...] = (
    "dwell_mean",
    "dwell_std",
    "dwell_min",
    "dwell_max",
    "dwell_median",
    "flight_mean",
    "flight_std",
    "flight_min",
    "flight_max",
    "flight_median",
    "downdown_mean",
    "downdown_std",
    "duration_s",
    "keys_per_second",
    "key_count",
    "backspace_count",
    "backspace_ratio",
    "enter_count",
    "pause_count",
    "longest_pause_ms",
)

CONTENT_FEATURE_NAMES: tuple[str, ...] = (
    "char_count",
    "word_count",
    "sentence_count",
    "mean_word_length",
    "punct_count",
    "punct_ratio",
    "exclam_count",
    "question_count",
    "ellipsis_count",
    "uppercase_ratio",
    "allcaps_word_count",
    "first_char_capitalized",
    "repeated_char_run_count",
)

FEATURE_NAMES: tuple[str, ...] = KD_FEATURE_NAMES + CONTENT_FEATURE_NAMES

_PUNCT_CHARS = frozenset(string.punctuation) | {"…"}
_SENTENCE_SPLIT = re.compile(r"[.!?]+")
_REPEAT_RUN = re.compile(r"([^\W\d_])\1{2,}", re.UNICODE)


@dataclass(frozen=True, slots=True)
class KeystrokeFeatureVector:
    dwell_mean: float = 0.0
    dwell_std: float = 0.0
    dwell_min: float = 0.0
    dwell_max: float = 0.0
    dwell_median: float = 0.0
    flight_mean: float = 0.0
    flight_std: float = 0.0
    flight_min: float = 0.0
    flight_max: float = 0.0
    flight_median: float = 0.0
    downdown_mean: float = 0.0
    downdown_std: float = 0.0
    duration_s: float = 0.0
    keys_per_second: float = 0.0
    key_count: float = 0.0
    backspace_count: float = 0.0
    backspace_ratio: float = 0.0
    enter_count: float = 0.0
    pause_count: float = 0.0
    longest_pause_ms: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=np.float64)


@dataclass(frozen=True, slots=True)
class ContentFeatureVector:
    char_count: float = 0.0
    word_count: float = 0.0
    sentence_count: float = 0.0
    mean_word_length: float = 0.0
    punct_count: float = 0.0
    punct_ratio: float = 0.0
    exclam_count: float = 0.0
    question_count: float = 0.0
    ellipsis_count: float = 0.0
    uppercase_ratio: float = 0.0
    allcaps_word_count: float = 0.0
    first_char_capitalized: float = 0.0
    repeated_char_run_count: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=np.float64)


@dataclass(frozen=True, slots=True)
class FeatureRow:
    """One message's 33-dim vector plus whether the KD half is meaningful."""

    message_id: str
    kd: KeystrokeFeatureVector
    content: ContentFeatureVector
    kd_valid: bool

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.kd.as_array(), self.content.as_array()])


def _match_key_pairs(events: tuple[KeyEvent, ...]) -> list[tuple[KeyEvent, float]]:
    """Pair presses with their releases (FIFO per key).

    Returns (press, release_t_ms) per press, in press order. A press with
    no release in the window closes at its own timestamp (dwell 0).
    """
    open_by_key: dict[str, list[int]] = {}
    presses: list[KeyEvent] = []
    release_t: list[float] = []
    for ev in events:
        if ev.action == "press":
            open_by_key.setdefault(ev.key, []).append(len(presses))
            presses.append(ev)
            release_t.append(ev.t_ms)  # dwell-0 closure until a release shows up
        else:
            pending = open_by_key.get(ev.key)
            if pending:
                release_t[pending.pop(0)] = ev.t_ms
    return list(zip(presses, release_t))


def _stats(values: list[float]) -> tuple[float, float, float, float, float]:
    if not values:
        return 0.0, 0.0, 0.0, 0.0, 0.0
    arr = np.asarray(values, dtype=np.float64)
    return (
        float(arr.mean()),
        float(arr.std()),
        float(arr.min()),
        float(arr.max()),
        float(np.median(arr)),
    )


def extract_keystroke_features(
    window: MessageEventWindow,
    pause_threshold_ms: float = DEFAULT_PAUSE_THRESHOLD_MS,
) -> KeystrokeFeatureVector:
    """Timing statistics over a validated per-message window.

    dwell = release - press per key, flight = next press - current release
    in press order (negative on rollover), down-down = delta between
    successive presses. Empty statistics come out as zeros.
    """
    pairs = _match_key_pairs(window.events)
    if not pairs:
        return KeystrokeFeatureVector()

    press_t = [p.t_ms for p, _ in pairs]
    dwells = [rel - p.t_ms for p, rel in pairs]
    flights = [pairs[i + 1][0].t_ms - pairs[i][1] for i in range(len(pairs) - 1)]
    downdowns = [b - a for a, b in zip(press_t, press_t[1:])]

    d_mean, d_std, d_min, d_max, d_med = _stats(dwells)
    f_mean, f_std, f_min, f_max, f_med = _stats(flights)
    dd_mean, dd_std, *_ = _stats(downdowns)

    last_event_t = max(e.t_ms for e in window.events)
    duration_s = (last_event_t - press_t[0]) / 1000.0
    key_count = len(pairs)
    backspace_count = sum(1 for p, _ in pairs if p.key == "Backspace")
    enter_count = sum(1 for p, _ in pairs if p.key == "Enter")
    pauses = [f for f in flights if f > pause_threshold_ms]

    return KeystrokeFeatureVector(
        dwell_mean=d_mean,
        dwell_std=d_std,
        dwell_min=d_min,
        dwell_max=d_max,
        dwell_median=d_med,
        flight_mean=f_mean,
        flight_std=f_std,
        flight_min=f_min,
        flight_max=f_max,
        flight_median=f_med,
        downdown_mean=dd_mean,
        downdown_std=dd_std,
        duration_s=duration_s,
        keys_per_second=key_count / duration_s if duration_s > 0 else 0.0,
        key_count=float(key_count),
        backspace_count=float(backspace_count),
        backspace_ratio=backspace_count / key_count if key_count else 0.0,
        enter_count=float(enter_count),
        pause_count=float(len(pauses)),
        longest_pause_ms=max(pauses) if pauses else 0.0,
    )


def extract_content_features(text: str) -> ContentFeatureVector:
    """Surface statistics of the message text; pure and deterministic."""
    if not text:
        return ContentFeatureVector()

    words = text.split()
    letters = [c for c in text if c.isalpha()]
    upper = sum(1 for c in letters if c.isupper())
    puncts = sum(1 for c in text if c in _PUNCT_CHARS)
    sentences = [s for s in _SENTENCE_SPLIT.split(text) if s.strip()]

    allcaps = 0
    for w in words:
        w_letters = [c for c in w if c.isalpha()]
        if len(w_letters) >= 2 and all(c.isupper() for c in w_letters):
            allcaps += 1

    return ContentFeatureVector(
        char_count=float(len(text)),
        word_count=float(len(words)),
        sentence_count=float(len(sentences)),
        mean_word_length=sum(len(w) for w in words) / len(words) if words else 0.0,
        punct_count=float(puncts),
        punct_ratio=puncts / len(text),
        exclam_count=float(text.count("!")),
        question_count=float(text.count("?")),
        ellipsis_count=float(text.count("...") + text.count("…")),
        uppercase_ratio=upper / len(letters) if letters else 0.0,
        allcaps_word_count=float(allcaps),
        first_char_capitalized=1.0 if text[0].isupper() else 0.0,
        repeated_char_run_count=float(len(_REPEAT_RUN.findall(text))),
    )


def build_feature_row(
    message: ChatMessage,
    window: MessageEventWindow,
    pause_threshold_ms: float = DEFAULT_PAUSE_THRESHOLD_MS,
) -> FeatureRow:
    """Combine both feature families; KD is zero-filled under 2 presses."""
    press_count = sum(1 for e in window.events if e.action == "press")
    kd_valid = press_count >= 2
    kd = (
        extract_keystroke_features(window, pause_threshold_ms)
        if kd_valid
        else KeystrokeFeatureVector()
    )
    return FeatureRow(
        message_id=message.message_id,
        kd=kd,
        content=extract_content_features(message.text),
        kd_valid=kd_valid,
    )

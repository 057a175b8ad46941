"""Seeded synthetic sessions: keystroke streams, texts, and gold labels.

Each category gets a typing profile (rate, dwell, corrections, pauses) and
a template pool. Profiles are loud by default so downstream checks are
stable; pairs that should be hard for the dimensional targets share their
typing parameters on purpose (fear/surprise, disgust/neutral).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace

from .core import CATEGORIES, ChatMessage, EmotionAnnotation, KeyEvent, MessageEventWindow
from .corpus import CorpusRecord

_ACTION_RANK = {"press": 0, "release": 1}


@dataclass(frozen=True, slots=True)
class EmotionProfile:
    category: str
    valence: int
    arousal: int
    keys_per_second_mean: float
    keys_per_second_std: float
    dwell_mean_ms: float
    dwell_std_ms: float
    backspace_prob: float
    pause_prob: float
    pause_mean_ms: float
    pause_std_ms: float
    templates: tuple[str, ...]

    def __post_init__(self) -> None:
        for p in (self.backspace_prob, self.pause_prob):
            if not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must be in [0,1]")
        if self.keys_per_second_std <= 0 or self.dwell_std_ms <= 0:
            raise ValueError("sampled distributions need positive std")


# Sentence frames share surface shape across categories (lowercase, no
# punctuation, 4-8 words) so content features stay flat and the text
# signal lives in the emotion words alone.
_FRAMES = (
    "i feel so {w} about this",
    "that video made me really {w}",
    "honestly i am just {w} now",
    "this whole thing keeps me {w}",
    "i am {w} and it shows",
    "watching that left me {w} today",
    "right now i feel completely {w}",
    "it makes me {w} every time",
    "so {w} after that",
    "i got {w} watching it",
)

_CATEGORY_WORDS = {
    "happiness": ("happy", "glad", "joyful", "cheerful", "delighted", "thrilled"),
    "sadness": ("sad", "gloomy", "unhappy", "hopeless", "miserable", "tearful"),
    "anger": ("mad", "angry", "furious", "annoyed", "outraged", "livid"),
    "disgust": ("gross", "disgusted", "revolted", "sickened", "nasty"),
    "fear": ("afraid", "scared", "terrified", "nervous", "anxious", "worried"),
    "surprise": ("shocked", "stunned", "surprised", "startled", "astonished"),
}

NEUTRAL_TEMPLATES = (
    "that video was fine i think",
    "i feel pretty normal about this",
    "nothing much changed for me there",
    "it was an ordinary clip really",
    "i am okay with all this",
    "that seemed fairly plain to me",
    "just a regular video to me",
    "i watched it without much reaction",
)

# Lexicon-free fillers mixed into every pool; they blur the text signal a
# little, which is what keeps the dimensional targets honest.
GENERIC_TEMPLATES = (
    "i am not sure about this",
    "it is what it is i guess",
    "let me think about that one",
    "that was something else for sure",
)


def _pool(category: str) -> tuple[str, ...]:
    if category == "neutral":
        return NEUTRAL_TEMPLATES + GENERIC_TEMPLATES
    words = _CATEGORY_WORDS[category]
    distinct = tuple(
        _FRAMES[i % len(_FRAMES)].format(w=words[(i + i // len(_FRAMES)) % len(words)])
        for i in range(12)
    )
    # ~25% generic weight: 12 distinct + 4 generic
    return distinct + GENERIC_TEMPLATES


def _profile(category, valence, arousal, rate, rate_std, dwell, dwell_std, bsp, pause) -> EmotionProfile:
    return EmotionProfile(
        category=category,
        valence=valence,
        arousal=arousal,
        keys_per_second_mean=rate,
        keys_per_second_std=rate_std,
        dwell_mean_ms=dwell,
        dwell_std_ms=dwell_std,
        backspace_prob=bsp,
        pause_prob=pause,
        pause_mean_ms=1800.0,
        pause_std_ms=300.0,
        templates=_pool(category),
    )


DEFAULT_PROFILES: dict[str, EmotionProfile] = {
    "neutral": _profile("neutral", 0, 0, 3.5, 0.5, 95.0, 18.0, 0.04, 0.06),
    "happiness": _profile("happiness", 1, 1, 6.5, 0.8, 70.0, 14.0, 0.02, 0.02),
    "sadness": _profile("sadness", -1, -1, 2.0, 0.35, 130.0, 25.0, 0.03, 0.18),
    # disgust types exactly like neutral: only the text can tell them apart
    "disgust": _profile("disgust", -1, 0, 3.5, 0.5, 95.0, 18.0, 0.04, 0.06),
    "fear": _profile("fear", -1, 1, 5.0, 0.7, 80.0, 16.0, 0.09, 0.10),
    # surprise types exactly like fear: same idea across the valence axis
    "surprise": _profile("surprise", 1, 1, 5.0, 0.7, 80.0, 16.0, 0.09, 0.10),
    "anger": _profile("anger", -1, 1, 8.0, 1.0, 55.0, 12.0, 0.12, 0.01),
}

_LETTERS = "abcdefghijklmnopqrstuvwxyz"


def _key_token(ch: str) -> str:
    return "Space" if ch == " " else ch


def generate_message(
    profile: EmotionProfile,
    seed: int,
    message_id: str = "m-0",
    session_id: str = "synthetic",
    user_id: str = "u-client",
) -> tuple[ChatMessage, MessageEventWindow, EmotionAnnotation]:
    """Simulate typing one message under the profile; deterministic per seed."""
    rng = random.Random(seed)
    text = rng.choice(profile.templates)
    rate = min(max(rng.gauss(profile.keys_per_second_mean, profile.keys_per_second_std), 0.8), 14.0)
    mean_gap = 1000.0 / rate

    events: list[KeyEvent] = []
    t = 10.0

    def stroke(key: str) -> None:
        nonlocal t
        gap = max(8.0, rng.gauss(mean_gap, 0.35 * mean_gap))
        if rng.random() < profile.pause_prob:
            gap += max(1100.0, rng.gauss(profile.pause_mean_ms, profile.pause_std_ms))
        t += gap
        dwell = max(20.0, rng.gauss(profile.dwell_mean_ms, profile.dwell_std_ms))
        events.append(KeyEvent(session_id, user_id, key, "press", t))
        events.append(KeyEvent(session_id, user_id, key, "release", t + dwell))

    for ch in text:
        if ch != " " and rng.random() < profile.backspace_prob:
            stroke(rng.choice(_LETTERS))  # typo
            stroke("Backspace")
        stroke(_key_token(ch))
    stroke("Enter")

    events.sort(key=lambda e: (e.t_ms, _ACTION_RANK[e.action], e.key))
    window = MessageEventWindow(message_id=message_id, events=tuple(events))
    message = ChatMessage(
        message_id=message_id,
        session_id=session_id,
        sender_role="client",
        text=text,
        sent_at_ms=events[-1].t_ms + 1.0,
    )
    gold = EmotionAnnotation(
        message_id=message_id,
        valence=profile.valence,
        arousal=profile.arousal,
        labels=(profile.category,),
        annotator_id="gold",
    )
    return message, window, gold


@dataclass(frozen=True, slots=True)
class CorpusConfig:
    counts: dict[str, int] | None = None  # None -> 100 per category
    kd_signal: bool = True
    text_signal: bool = True
    hard_mode: bool = False


def _effective_profiles(config: CorpusConfig) -> dict[str, EmotionProfile]:
    base = DEFAULT_PROFILES["neutral"]
    common_pool = NEUTRAL_TEMPLATES + GENERIC_TEMPLATES
    profiles = {}
    for cat, prof in DEFAULT_PROFILES.items():
        p = prof
        if config.hard_mode:
            p = replace(
                p,
                keys_per_second_mean=(p.keys_per_second_mean + base.keys_per_second_mean) / 2,
                dwell_mean_ms=(p.dwell_mean_ms + base.dwell_mean_ms) / 2,
                backspace_prob=(p.backspace_prob + base.backspace_prob) / 2,
                pause_prob=(p.pause_prob + base.pause_prob) / 2,
            )
        if not config.kd_signal:
            p = replace(
                p,
                keys_per_second_mean=base.keys_per_second_mean,
                keys_per_second_std=base.keys_per_second_std,
                dwell_mean_ms=base.dwell_mean_ms,
                dwell_std_ms=base.dwell_std_ms,
                backspace_prob=base.backspace_prob,
                pause_prob=base.pause_prob,
            )
        if not config.text_signal:
            p = replace(p, templates=common_pool)
        profiles[cat] = p
    return profiles


def generate_corpus(config: CorpusConfig = CorpusConfig(), seed: int = 0) -> list[CorpusRecord]:
    """Labeled corpus with per-category counts, shuffled by the seed.

    Per-message seeds partition the seed space deterministically, so any
    subset of the corpus regenerates identically.
    """
    counts = config.counts or {c: 100 for c in CATEGORIES}
    profiles = _effective_profiles(config)
    records: list[CorpusRecord] = []
    index = 0
    for cat in CATEGORIES:
        profile = profiles[cat]
        for _ in range(counts.get(cat, 0)):
            msg_seed = seed * 1_000_003 + index
            message, window, gold = generate_message(
                profile, msg_seed, message_id=f"m-{cat}-{index:05d}"
            )
            records.append(CorpusRecord(message=message, window=window, gold=gold))
            index += 1
    random.Random(seed).shuffle(records)
    return records

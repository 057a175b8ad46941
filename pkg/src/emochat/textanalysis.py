"""Per-message text emotion: lexicon analyzer, remote LLM client, PII redaction.

Both analyzers satisfy the same contract: analyze(context, text) ->
TextEmotion. The lexicon analyzer is fully offline and deterministic and
is the automatic fallback whenever the remote analyzer fails.
"""

from __future__ import annotations

import json
import re
import threading
import urllib.error
import urllib.request
from dataclasses import dataclass
from importlib import resources
from typing import Callable, Protocol

from .core import CATEGORIES, EmochatError


class AnalyzerUnavailable(EmochatError):
    """The remote analyzer could not produce a result (transport failure)."""


class ParseError(EmochatError):
    """The remote analyzer returned something other than the strict schema."""


@dataclass(frozen=True, slots=True)
class TextEmotion:
    valence: int
    arousal: int
    labels: tuple[str, ...]
    confidence: float

    def __post_init__(self) -> None:
        if self.valence not in (-1, 0, 1) or self.arousal not in (-1, 0, 1):
            raise ValueError("valence/arousal must be in {-1,0,1}")
        if len(self.labels) > 3 or len(set(self.labels)) != len(self.labels):
            raise ValueError("labels must be <=3 and distinct")
        for lab in self.labels:
            if lab not in CATEGORIES:
                raise ValueError(f"unknown category {lab!r}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must be in [0,1]")


@dataclass(frozen=True, slots=True)
class ConversationContext:
    """Chronological (sender_role, text) turns up to the current message."""

    turns: tuple[tuple[str, str], ...] = ()

    def extended(self, role: str, text: str) -> "ConversationContext":
        return ConversationContext(self.turns + ((role, text),))


class Analyzer(Protocol):
    def analyze(self, context: ConversationContext, text: str) -> TextEmotion: ...


# ---------------------------------------------------------------------------
# PII redaction

_EMAIL_RE = re.compile(r"[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}")
_PHONE_CANDIDATE_RE = re.compile(r"\+?\(?\d[\d\s().-]*\d")


def redact_pii(text: str) -> str:
    """Replace email-like and phone-like substrings with placeholder tokens.

    Phone-like means a digit run (separators allowed) containing at least
    7 digits. Idempotent: the placeholders contain nothing re-matchable.
    """
    out = _EMAIL_RE.sub("[EMAIL]", text)

    def _phone(m: re.Match[str]) -> str:
        digits = sum(c.isdigit() for c in m.group(0))
        return "[PHONE]" if digits >= 7 else m.group(0)

    return _PHONE_CANDIDATE_RE.sub(_phone, out)


# ---------------------------------------------------------------------------
# Lexicon analyzer

# Small curated per-category word lists. Scores are per-hit weights; the
# lists double as the vocabulary the synthetic generator writes with.
LEXICON: dict[str, dict[str, float]] = {
    "happiness": {
        "happy": 1.0, "glad": 1.0, "joy": 1.0, "joyful": 1.0, "delighted": 1.2,
        "cheerful": 1.0, "wonderful": 1.0, "love": 0.8, "awesome": 1.0,
        "pleased": 0.8, "thrilled": 1.2, "grateful": 0.8, "excited": 0.8,
    },
    "sadness": {
        "sad": 1.0, "unhappy": 1.0, "depressed": 1.2, "miserable": 1.2,
        "gloomy": 1.0, "heartbroken": 1.2, "crying": 1.0, "lonely": 1.0,
        "hopeless": 1.2, "grieving": 1.0, "tearful": 1.0, "down": 0.5,
    },
    "anger": {
        "angry": 1.0, "mad": 1.0, "furious": 1.5, "rage": 1.2, "annoyed": 0.8,
        "irritated": 0.8, "outraged": 1.2, "hate": 1.0, "frustrated": 0.8,
        "fuming": 1.2, "livid": 1.5,
    },
    "disgust": {
        "disgusting": 1.2, "disgusted": 1.2, "gross": 1.0, "nasty": 1.0,
        "revolting": 1.2, "revolted": 1.2, "sickening": 1.2, "sickened": 1.2,
        "vile": 1.2, "repulsive": 1.2, "yuck": 1.0, "awful": 0.6,
    },
    "fear": {
        "afraid": 1.0, "scared": 1.0, "terrified": 1.5, "fear": 1.0,
        "frightened": 1.2, "anxious": 0.8, "worried": 0.6, "panicking": 1.2,
        "nervous": 0.8, "dreading": 1.0,
    },
    "surprise": {
        "surprised": 1.0, "shocked": 1.2, "astonished": 1.2, "unexpected": 0.8,
        "unbelievable": 0.8, "stunned": 1.2, "startled": 1.0, "wow": 1.0,
        "whoa": 0.8, "sudden": 0.5,
    },
}

_POSITIVE_CATEGORIES = ("happiness",)
_NEGATIVE_CATEGORIES = ("sadness", "anger", "disgust", "fear")

# High-arousal categories contribute full weight to the arousal score,
# sadness none; exclamation marks add on top.
_AROUSAL_WEIGHT = {
    "anger": 1.0, "fear": 1.0, "surprise": 1.0,
    "happiness": 0.5, "disgust": 0.5, "sadness": 0.0,
}

_WORD_RE = re.compile(r"[a-z']+")


class LexiconAnalyzer:
    """Deterministic offline analyzer scoring category word hits."""

    def analyze(self, context: ConversationContext, text: str) -> TextEmotion:
        if not text.strip():
            raise ValueError("text must be non-empty after trimming")
        words = _WORD_RE.findall(text.lower())

        hits: dict[str, float] = {}
        for cat, table in LEXICON.items():
            score = sum(table[w] for w in words if w in table)
            if score > 0:
                hits[cat] = score

        exclam = text.count("!")
        pos = sum(hits.get(c, 0.0) for c in _POSITIVE_CATEGORIES)
        neg = sum(hits.get(c, 0.0) for c in _NEGATIVE_CATEGORIES)
        valence = 1 if pos > neg else -1 if neg > pos else 0

        arousal_score = (
            sum(score * _AROUSAL_WEIGHT[cat] for cat, score in hits.items())
            + 0.5 * exclam
        )
        arousal = -1 if arousal_score < 0.5 else (0 if arousal_score < 1.5 else 1)

        if not hits:
            return TextEmotion(valence=0, arousal=arousal, labels=("neutral",), confidence=0.25)

        ranked = sorted(hits, key=lambda c: (-hits[c], CATEGORIES.index(c)))
        total = sum(hits.values())
        confidence = min(0.95, 0.4 + 0.15 * total)
        return TextEmotion(
            valence=valence,
            arousal=arousal,
            labels=tuple(ranked[:3]),
            confidence=confidence,
        )


# ---------------------------------------------------------------------------
# Remote analyzer

_SCALE_WORDS = {-1: "negative/low", 0: "neutral/medium", 1: "positive/high"}


@dataclass(frozen=True, slots=True)
class RequestPayload:
    model: str
    prompt: str

    def to_json(self) -> bytes:
        return json.dumps(
            {"model": self.model, "prompt": self.prompt}, separators=(",", ":")
        ).encode("utf-8")


def _load_prompt_template() -> str:
    return resources.files("emochat").joinpath("prompt_template.txt").read_text("utf-8")


def build_remote_request(
    context: ConversationContext, text: str, model: str = "default"
) -> RequestPayload:
    """Format the transcript + scales + category names into the prompt.

    Caller must have applied redact_pii to every text in the payload.
    """
    lines = [f"{role}: {turn}" for role, turn in context.turns]
    lines.append(f"client (current message): {text}")
    prompt = _load_prompt_template().format(
        transcript="\n".join(lines),
        categories=", ".join(CATEGORIES),
    )
    return RequestPayload(model=model, prompt=prompt)


def parse_remote_response(data: bytes) -> TextEmotion:
    """Strict decode: exactly {valence, arousal, labels[<=3], confidence}."""
    try:
        obj = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"response is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict) or set(obj) != {"valence", "arousal", "labels", "confidence"}:
        raise ParseError(f"response keys must be exactly valence/arousal/labels/confidence")

    valence, arousal = obj["valence"], obj["arousal"]
    for name, value in (("valence", valence), ("arousal", arousal)):
        if isinstance(value, bool) or value not in (-1, 0, 1):
            raise ParseError(f"{name} must be -1, 0, or 1, got {value!r}")

    labels = obj["labels"]
    if not isinstance(labels, list) or len(labels) > 3 or len(set(labels)) != len(labels):
        raise ParseError("labels must be a list of at most 3 distinct categories")
    for lab in labels:
        if lab not in CATEGORIES:
            raise ParseError(f"unknown category {lab!r}")

    confidence = obj["confidence"]
    if isinstance(confidence, bool) or not isinstance(confidence, (int, float)):
        raise ParseError("confidence must be a number")
    if not 0.0 <= confidence <= 1.0:
        raise ParseError(f"confidence must be in [0,1], got {confidence}")

    return TextEmotion(
        valence=valence, arousal=arousal, labels=tuple(labels), confidence=float(confidence)
    )


Transport = Callable[[str, bytes, dict[str, str], float], bytes]


def _urllib_transport(url: str, payload: bytes, headers: dict[str, str], timeout: float) -> bytes:
    req = urllib.request.Request(url, data=payload, headers=headers, method="POST")
    with urllib.request.urlopen(req, timeout=timeout) as resp:
        return resp.read()


class RemoteAnalyzer:
    """HTTP JSON analyzer with a pluggable transport and a concurrency cap."""

    def __init__(
        self,
        endpoint: str,
        model: str = "default",
        api_key: str = "",
        timeout_s: float = 10.0,
        max_concurrency: int = 4,
        transport: Transport | None = None,
    ) -> None:
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key
        self.timeout_s = timeout_s
        self._transport = transport or _urllib_transport
        self._slots = threading.Semaphore(max_concurrency)

    def analyze(self, context: ConversationContext, text: str) -> TextEmotion:
        if not text.strip():
            raise ValueError("text must be non-empty after trimming")
        safe_context = ConversationContext(
            tuple((role, redact_pii(turn)) for role, turn in context.turns)
        )
        payload = build_remote_request(safe_context, redact_pii(text), self.model)
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        with self._slots:
            try:
                raw = self._transport(self.endpoint, payload.to_json(), headers, self.timeout_s)
            except (OSError, urllib.error.URLError) as exc:
                raise AnalyzerUnavailable(str(exc)) from exc
        return parse_remote_response(raw)


def analyze_with_fallback(
    primary: Analyzer,
    fallback: Analyzer,
    context: ConversationContext,
    text: str,
) -> tuple[TextEmotion, bool]:
    """Run primary, fall back on failure. Returns (emotion, degraded)."""
    try:
        return primary.analyze(context, text), False
    except (AnalyzerUnavailable, ParseError):
        return fallback.analyze(context, text), True

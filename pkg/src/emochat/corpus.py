"""Corpus records: one message + its event window + optional gold labels.

The newline-delimited JSON schema here is the exchange format between the
CLI subcommands and the synthetic generator; see docs/corpus-schema.md.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .core import ChatMessage, EmotionAnnotation, KeyEvent, MessageEventWindow
from .features import DEFAULT_PAUSE_THRESHOLD_MS, build_feature_row
from .fusion import LabeledRow, build_fused_row
from .textanalysis import Analyzer, ConversationContext, LexiconAnalyzer


@dataclass(frozen=True, slots=True)
class CorpusRecord:
    message: ChatMessage
    window: MessageEventWindow
    gold: EmotionAnnotation | None = None


def record_to_dict(record: CorpusRecord) -> dict:
    msg = record.message
    user_id = record.window.events[0].user_id if record.window.events else "unknown"
    doc = {
        "message": {
            "message_id": msg.message_id,
            "session_id": msg.session_id,
            "sender_role": msg.sender_role,
            "text": msg.text,
            "sent_at_ms": msg.sent_at_ms,
        },
        "user_id": user_id,
        "events": [
            {"key": e.key, "action": e.action, "t_ms": e.t_ms} for e in record.window.events
        ],
    }
    if record.gold is not None:
        doc["gold"] = {
            "valence": record.gold.valence,
            "arousal": record.gold.arousal,
            "labels": list(record.gold.labels),
            "annotator_id": record.gold.annotator_id,
        }
    return doc


def record_from_dict(doc: dict) -> CorpusRecord:
    m = doc["message"]
    message = ChatMessage(
        message_id=m["message_id"],
        session_id=m["session_id"],
        sender_role=m["sender_role"],
        text=m["text"],
        sent_at_ms=float(m["sent_at_ms"]),
    )
    user_id = doc.get("user_id", "unknown")
    events = tuple(
        KeyEvent(
            session_id=m["session_id"],
            user_id=user_id,
            key=e["key"],
            action=e["action"],
            t_ms=float(e["t_ms"]),
        )
        for e in doc["events"]
    )
    gold = None
    if "gold" in doc:
        g = doc["gold"]
        gold = EmotionAnnotation(
            message_id=m["message_id"],
            valence=int(g["valence"]),
            arousal=int(g["arousal"]),
            labels=tuple(g["labels"]),
            annotator_id=g.get("annotator_id", "gold"),
        )
    return CorpusRecord(
        message=message, window=MessageEventWindow(m["message_id"], events), gold=gold
    )


def corpus_to_jsonl(records: list[CorpusRecord], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record_to_dict(record), separators=(",", ":")))
            fh.write("\n")


def corpus_from_jsonl(path: str) -> list[CorpusRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(record_from_dict(json.loads(line)))
    return records


def annotations_to_jsonl(annotations: list[EmotionAnnotation], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for a in annotations:
            fh.write(
                json.dumps(
                    {
                        "message_id": a.message_id,
                        "valence": a.valence,
                        "arousal": a.arousal,
                        "labels": list(a.labels),
                        "annotator_id": a.annotator_id,
                    },
                    separators=(",", ":"),
                )
            )
            fh.write("\n")


def annotations_from_jsonl(path: str) -> list[EmotionAnnotation]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            out.append(
                EmotionAnnotation(
                    message_id=doc["message_id"],
                    valence=int(doc["valence"]),
                    arousal=int(doc["arousal"]),
                    labels=tuple(doc["labels"]),
                    annotator_id=doc.get("annotator_id", "unknown"),
                )
            )
    return out


def featurize_records(
    records: list[CorpusRecord],
    analyzer: Analyzer | None = None,
    pause_threshold_ms: float = DEFAULT_PAUSE_THRESHOLD_MS,
) -> list[LabeledRow]:
    """Message + window -> fused row per record (lexicon analyzer by default)."""
    analyzer = analyzer or LexiconAnalyzer()
    rows = []
    for record in records:
        feature_row = build_feature_row(record.message, record.window, pause_threshold_ms)
        te = analyzer.analyze(ConversationContext(), record.message.text)
        rows.append(LabeledRow(fused=build_fused_row(feature_row, te), gold=record.gold))
    return rows

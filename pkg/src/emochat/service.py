"""Real-time chat server speaking newline-delimited JSON over TCP.

Client->server frames: join, key_event, chat_message.
Server->client frames: chat_message, emotion_update, error.

Keystroke frames flow client->server only and are never mirrored to
peers. Message fan-out never waits on inference; the emotion_update for a
message always arrives after that message's chat_message frame. Persisted
session records never contain raw key events unless the retention flag is
set.
"""

from __future__ import annotations

import asyncio
import json
import logging
import os
import time
from collections import deque
from dataclasses import dataclass, field

from .config import Config
from .core import (
    ChatMessage,
    EmotionPrediction,
    KeyEvent,
    MAX_MESSAGE_CODEPOINTS,
    MessageEventWindow,
    validate_event_stream,
)
from .features import FEATURE_NAMES, FeatureRow, build_feature_row
from .fusion import ModelSuite, build_fused_row, predict_message
from .textanalysis import (
    Analyzer,
    ConversationContext,
    LexiconAnalyzer,
    TextEmotion,
    analyze_with_fallback,
    redact_pii,
)

log = logging.getLogger("emochat.service")

EVENT_BUFFER_CAP = 50_000


def _frame(obj: dict) -> bytes:
    return json.dumps(obj, separators=(",", ":")).encode("utf-8") + b"\n"


class Connection:
    """One joined (or joining) socket with its pending keystroke buffer."""

    def __init__(self, writer: asyncio.StreamWriter, buffer_cap: int = EVENT_BUFFER_CAP) -> None:
        self.writer = writer
        self.role: str | None = None
        self.user_id: str | None = None
        self.session: Session | None = None
        self.pending: deque[KeyEvent] = deque(maxlen=buffer_cap)
        self.dropped_events = 0

    def send(self, obj: dict) -> None:
        if self.writer.is_closing():
            return
        self.writer.write(_frame(obj))

    def send_error(self, code: str, detail: str) -> None:
        self.send({"type": "error", "code": code, "detail": detail})

    def buffer_event(self, event: KeyEvent) -> None:
        if len(self.pending) == self.pending.maxlen:
            self.dropped_events += 1
        self.pending.append(event)

    def take_pending(self) -> tuple[KeyEvent, ...]:
        snapshot = tuple(self.pending)
        self.pending.clear()
        return snapshot


@dataclass(slots=True)
class Session:
    session_id: str
    connections: list[Connection] = field(default_factory=list)
    message_seq: int = 0
    transcript: list[tuple[str, str]] = field(default_factory=list)
    lock: asyncio.Lock = field(default_factory=asyncio.Lock)

    def role_taken(self, role: str) -> bool:
        return any(c.role == role for c in self.connections)

    def next_message_id(self) -> str:
        self.message_seq += 1
        return f"m{self.message_seq}"


def prediction_from_text_emotion(message_id: str, te: TextEmotion) -> EmotionPrediction:
    """Analyzer-only prediction used when no suite fits the message."""
    return EmotionPrediction(
        message_id=message_id,
        valence=te.valence,
        valence_confidence=te.confidence,
        arousal=te.arousal,
        arousal_confidence=te.confidence,
        labels=tuple((lab, te.confidence) for lab in te.labels),
        source="text",
    )


def run_inference(
    message: ChatMessage,
    window: MessageEventWindow,
    suite: ModelSuite | None,
    analyzer: Analyzer,
    fallback: Analyzer | None = None,
    context: ConversationContext = ConversationContext(),
    pause_threshold_ms: float = 1000.0,
    apply_redaction: bool = True,
) -> tuple[EmotionPrediction, bool, FeatureRow]:
    """Features + text analysis + suite prediction for one message.

    Returns (prediction, degraded, feature_row). Falls back to the
    analyzer's own emotion when the suite is missing or needs KD dims the
    message does not have (pasted text).
    """
    feature_row = build_feature_row(message, window, pause_threshold_ms)
    text_for_analysis = redact_pii(message.text) if apply_redaction else message.text
    if fallback is not None:
        te, degraded = analyze_with_fallback(analyzer, fallback, context, text_for_analysis)
    else:
        te, degraded = analyzer.analyze(context, text_for_analysis), False

    if suite is None or (not feature_row.kd_valid and suite.mode in ("kd", "fusion")):
        return prediction_from_text_emotion(message.message_id, te), degraded, feature_row

    fused = build_fused_row(feature_row, te)
    values = suite.slice_values(fused.values)
    prediction = predict_message(suite, values, message_id=message.message_id)
    return prediction, degraded, feature_row


def prediction_to_dict(prediction: EmotionPrediction, degraded: bool) -> dict:
    return {
        "message_id": prediction.message_id,
        "valence": prediction.valence,
        "valence_confidence": prediction.valence_confidence,
        "arousal": prediction.arousal,
        "arousal_confidence": prediction.arousal_confidence,
        "labels": [{"label": lab, "confidence": conf} for lab, conf in prediction.labels],
        "source": prediction.source,
        "degraded": degraded,
    }


class ChatServer:
    def __init__(
        self,
        config: Config,
        suite: ModelSuite | None = None,
        analyzer: Analyzer | None = None,
        fallback: Analyzer | None = None,
    ) -> None:
        self.config = config
        self.suite = suite
        self.analyzer = analyzer or LexiconAnalyzer()
        # remote analyzers always get the lexicon as a safety net
        self.fallback = fallback if analyzer is not None else None
        self.sessions: dict[str, Session] = {}
        self._server: asyncio.Server | None = None

    # -- lifecycle -------------------------------------------------------

    async def start(self) -> tuple[str, int]:
        self._server = await asyncio.start_server(
            self._handle_connection, self.config.host, self.config.port
        )
        host, port = self._server.sockets[0].getsockname()[:2]
        os.makedirs(self.config.persistence_dir, exist_ok=True)
        log.info("listening on %s:%s", host, port)
        return host, port

    async def serve_forever(self) -> None:
        if self._server is None:
            await self.start()
        assert self._server is not None
        async with self._server:
            await self._server.serve_forever()

    async def stop(self) -> None:
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()

    # -- frame handling --------------------------------------------------

    async def _handle_connection(
        self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter
    ) -> None:
        conn = Connection(writer)
        try:
            while True:
                line = await reader.readline()
                if not line:
                    break
                line = line.strip()
                if not line:
                    continue
                try:
                    frame = json.loads(line)
                except json.JSONDecodeError:
                    conn.send_error("BadFrame", "frame is not valid JSON")
                    continue
                if not isinstance(frame, dict) or "type" not in frame:
                    conn.send_error("BadFrame", "frame must be an object with a type")
                    continue
                await self._dispatch(conn, frame)
        except (ConnectionResetError, asyncio.IncompleteReadError):
            pass
        finally:
            if conn.session is not None:
                async with conn.session.lock:
                    if conn in conn.session.connections:
                        conn.session.connections.remove(conn)
            writer.close()

    async def _dispatch(self, conn: Connection, frame: dict) -> None:
        kind = frame["type"]
        if kind == "join":
            await self._on_join(conn, frame)
        elif kind == "key_event":
            await self._on_key_event(conn, frame)
        elif kind == "chat_message":
            await self._on_chat_message(conn, frame)
        else:
            conn.send_error("UnknownFrameType", f"unknown frame type {kind!r}")

    async def _on_join(self, conn: Connection, frame: dict) -> None:
        session_id = frame.get("session_id")
        role = frame.get("role")
        user_id = frame.get("user_id")
        if not session_id or not user_id or role not in ("client", "responder", "supervisor"):
            conn.send_error("BadFrame", "join needs session_id, user_id and a valid role")
            return
        session = self.sessions.setdefault(session_id, Session(session_id=session_id))
        async with session.lock:
            if role in ("client", "responder") and session.role_taken(role):
                conn.send_error("RoleTaken", f"session already has an active {role}")
                return
            conn.role = role
            conn.user_id = user_id
            conn.session = session
            session.connections.append(conn)
            # ack so scripted clients can sequence joins across connections
            conn.send({"type": "joined", "session_id": session_id, "role": role})

    async def _on_key_event(self, conn: Connection, frame: dict) -> None:
        if conn.session is None:
            conn.send_error("NotJoined", "join a session before sending key events")
            return
        try:
            event = KeyEvent(
                session_id=conn.session.session_id,
                user_id=conn.user_id or "unknown",
                key=frame.get("key", ""),
                action=frame.get("action", ""),
                t_ms=float(frame.get("t_ms", -1)),
            )
        except (TypeError, ValueError) as exc:
            conn.send_error("InvalidEvent", str(exc))
            return
        conn.buffer_event(event)

    async def _on_chat_message(self, conn: Connection, frame: dict) -> None:
        session = conn.session
        if session is None:
            conn.send_error("NotJoined", "join a session before sending messages")
            return
        if conn.role == "supervisor":
            conn.send_error("ReadOnlyRole", "supervisors cannot send chat messages")
            return
        text = frame.get("text")
        if not isinstance(text, str) or not text.strip():
            conn.send_error("EmptyMessage", "chat_message needs non-empty text")
            return
        if len(text) > MAX_MESSAGE_CODEPOINTS:
            conn.send_error("OversizeMessage", f"text exceeds {MAX_MESSAGE_CODEPOINTS} code points")
            return

        async with session.lock:
            message_id = session.next_message_id()
            ts = time.time() * 1000.0
            message = ChatMessage(
                message_id=message_id,
                session_id=session.session_id,
                sender_role=conn.role or "client",
                text=text,
                sent_at_ms=ts,
            )
            out = {
                "type": "chat_message",
                "message_id": message_id,
                "sender_role": message.sender_role,
                "text": text,
                "ts": ts,
            }
            for peer in session.connections:
                peer.send(out)
            context = ConversationContext(tuple(session.transcript))
            session.transcript.append((message.sender_role, text))
            snapshot = conn.take_pending()

        # delivery must not wait for inference
        asyncio.create_task(self._infer_and_fan_out(session, conn, message, snapshot, context))

    async def _infer_and_fan_out(
        self,
        session: Session,
        sender: Connection,
        message: ChatMessage,
        snapshot: tuple[KeyEvent, ...],
        context: ConversationContext,
    ) -> None:
        try:
            stream = validate_event_stream(list(snapshot))
            window = MessageEventWindow(message_id=message.message_id, events=stream.events)
            prediction, degraded, feature_row = await asyncio.to_thread(
                run_inference,
                message,
                window,
                self.suite,
                self.analyzer,
                self.fallback,
                context,
                self.config.pause_threshold_ms,
                self.config.redaction,
            )
        except Exception:
            log.exception("inference failed for %s", message.message_id)
            return

        # the wire frame omits the scale confidences; the persisted record keeps them
        wire = {
            "type": "emotion_update",
            "message_id": prediction.message_id,
            "valence": prediction.valence,
            "arousal": prediction.arousal,
            "labels": [{"label": lab, "confidence": conf} for lab, conf in prediction.labels],
            "source": prediction.source,
            "degraded": degraded,
        }
        # persist first: once anyone sees the frame, the record is durable
        self._persist(session, message, feature_row, prediction, degraded, window)
        async with session.lock:
            for peer in session.connections:
                if peer.role == "supervisor":
                    peer.send(wire)
                elif peer.role == "responder" and peer is not sender:
                    peer.send(wire)
                elif (
                    peer.role == "client"
                    and self.config.show_client_emotions
                    and peer is sender
                ):
                    peer.send(wire)

    # -- persistence -----------------------------------------------------

    def _persist(
        self,
        session: Session,
        message: ChatMessage,
        feature_row: FeatureRow,
        prediction: EmotionPrediction,
        degraded: bool,
        window: MessageEventWindow,
    ) -> None:
        text = redact_pii(message.text) if self.config.redaction else message.text
        record = {
            "message_id": message.message_id,
            "sender_role": message.sender_role,
            "text": text,
            "kd_valid": feature_row.kd_valid,
            "features": dict(
                zip(FEATURE_NAMES, (float(v) for v in feature_row.as_array()))
            ),
            "prediction": prediction_to_dict(prediction, degraded),
            "sent_at_ms": message.sent_at_ms,
            "recorded_at_ms": time.time() * 1000.0,
        }
        if self.config.retention:
            record["events"] = [
                {"key": e.key, "action": e.action, "t_ms": e.t_ms} for e in window.events
            ]
        path = os.path.join(self.config.persistence_dir, f"{session.session_id}.jsonl")
        try:
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, separators=(",", ":")))
                fh.write("\n")
        except OSError:
            log.exception("failed to persist record for %s", message.message_id)


async def serve(config: Config, suite: ModelSuite | None, analyzer: Analyzer | None = None,
                fallback: Analyzer | None = None) -> None:
    server = ChatServer(config, suite=suite, analyzer=analyzer, fallback=fallback)
    host, port = await server.start()
    print(f"emochat serve: listening on {host}:{port}", flush=True)
    assert server._server is not None
    async with server._server:
        await server._server.serve_forever()

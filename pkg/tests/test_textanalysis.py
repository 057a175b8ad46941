import json

import pytest
from hypothesis import given, strategies as st

from emochat.core import CATEGORIES
from emochat.textanalysis import (
    AnalyzerUnavailable,
    ConversationContext,
    LexiconAnalyzer,
    ParseError,
    RemoteAnalyzer,
    TextEmotion,
    analyze_with_fallback,
    build_remote_request,
    parse_remote_response,
    redact_pii,
)

CTX = ConversationContext()


class TestLexiconAnalyzer:
    def setup_method(self):
        self.analyzer = LexiconAnalyzer()

    def test_happy_keyword(self):
        te = self.analyzer.analyze(CTX, "I am so happy today")
        assert te.labels == ("happiness",)
        assert te.valence == 1

    def test_disgust_keyword(self):
        te = self.analyzer.analyze(CTX, "This is disgusting")
        assert te.labels == ("disgust",)
        assert te.valence == -1

    def test_no_hits_is_calm_neutral(self):
        te = self.analyzer.analyze(CTX, "ok")
        assert te.labels == ("neutral",)
        assert te.valence == 0
        assert te.arousal == -1

    def test_exclamations_raise_arousal(self):
        calm = self.analyzer.analyze(CTX, "I am happy")
        loud = self.analyzer.analyze(CTX, "I am happy!!!")
        assert loud.arousal > calm.arousal

    def test_at_most_three_labels(self):
        te = self.analyzer.analyze(CTX, "happy sad angry scared shocked gross")
        assert len(te.labels) == 3

    def test_blank_text_rejected(self):
        with pytest.raises(ValueError):
            self.analyzer.analyze(CTX, "   ")

    def test_redaction_does_not_change_labels(self):
        text = "I am furious, call me at 555-123-4567 or a@b.com"
        assert (
            self.analyzer.analyze(CTX, text).labels
            == self.analyzer.analyze(CTX, redact_pii(text)).labels
        )

    @given(st.text(min_size=1, max_size=120))
    def test_output_always_valid(self, text):
        if not text.strip():
            return
        te = LexiconAnalyzer().analyze(CTX, text)
        # constructor re-validates invariants; also check determinism
        assert te == LexiconAnalyzer().analyze(CTX, text)
        assert isinstance(te, TextEmotion)


class TestRedactPii:
    def test_email(self):
        assert redact_pii("mail me a@b.com") == "mail me [EMAIL]"

    def test_phone(self):
        assert redact_pii("call 555-123-4567") == "call [PHONE]"

    def test_no_pii_unchanged(self):
        assert redact_pii("no pii here") == "no pii here"

    def test_short_numbers_kept(self):
        assert redact_pii("room 401 at 2pm") == "room 401 at 2pm"

    @given(st.text(max_size=200))
    def test_idempotent(self, text):
        once = redact_pii(text)
        assert redact_pii(once) == once


class TestRemoteProtocol:
    def test_prompt_contains_transcript_scales_and_categories(self):
        ctx = ConversationContext((("client", "hello"), ("responder", "hi there")))
        payload = build_remote_request(ctx, "how are you", model="m")
        assert "client: hello" in payload.prompt
        assert "responder: hi there" in payload.prompt
        assert "how are you" in payload.prompt
        assert "-1, 0, and 1" in payload.prompt
        for cat in CATEGORIES:
            assert cat in payload.prompt

    def test_parse_well_formed(self):
        te = parse_remote_response(
            json.dumps(
                {"valence": 1, "arousal": 0, "labels": ["happiness"], "confidence": 0.9}
            ).encode()
        )
        assert te == TextEmotion(1, 0, ("happiness",), 0.9)

    def test_parse_rejects_four_labels(self):
        doc = {"valence": 0, "arousal": 0,
               "labels": ["happiness", "sadness", "anger", "fear"], "confidence": 0.5}
        with pytest.raises(ParseError):
            parse_remote_response(json.dumps(doc).encode())

    def test_parse_rejects_out_of_domain_valence(self):
        doc = {"valence": 2, "arousal": 0, "labels": [], "confidence": 0.5}
        with pytest.raises(ParseError):
            parse_remote_response(json.dumps(doc).encode())

    def test_parse_rejects_extra_keys_and_non_json(self):
        doc = {"valence": 0, "arousal": 0, "labels": [], "confidence": 0.5, "note": "hi"}
        with pytest.raises(ParseError):
            parse_remote_response(json.dumps(doc).encode())
        with pytest.raises(ParseError):
            parse_remote_response(b"not json")

    def test_parse_rejects_bad_confidence(self):
        doc = {"valence": 0, "arousal": 0, "labels": [], "confidence": 1.5}
        with pytest.raises(ParseError):
            parse_remote_response(json.dumps(doc).encode())


class TestRemoteAnalyzer:
    def test_success_path_uses_transport(self):
        sent = {}

        def transport(url, payload, headers, timeout):
            sent["url"] = url
            sent["payload"] = json.loads(payload)
            return json.dumps(
                {"valence": -1, "arousal": 1, "labels": ["anger"], "confidence": 0.8}
            ).encode()

        analyzer = RemoteAnalyzer("http://example/api", model="m1", transport=transport)
        te = analyzer.analyze(CTX, "I am mad at a@b.com")
        assert te.labels == ("anger",)
        assert sent["url"] == "http://example/api"
        # PII is redacted before it leaves the process
        assert "a@b.com" not in sent["payload"]["prompt"]
        assert "[EMAIL]" in sent["payload"]["prompt"]

    def test_transport_failure_is_unavailable(self):
        def transport(url, payload, headers, timeout):
            raise OSError("connection refused")

        analyzer = RemoteAnalyzer("http://example/api", transport=transport)
        with pytest.raises(AnalyzerUnavailable):
            analyzer.analyze(CTX, "hello")

    def test_fallback_chain(self):
        def transport(url, payload, headers, timeout):
            raise OSError("down")

        remote = RemoteAnalyzer("http://example/api", transport=transport)
        te, degraded = analyze_with_fallback(remote, LexiconAnalyzer(), CTX, "I am so happy")
        assert degraded
        assert te.labels == ("happiness",)

    def test_fallback_also_covers_parse_errors(self):
        def transport(url, payload, headers, timeout):
            return b'{"weird": true}'

        remote = RemoteAnalyzer("http://example/api", transport=transport)
        te, degraded = analyze_with_fallback(remote, LexiconAnalyzer(), CTX, "so sad")
        assert degraded
        assert te.labels == ("sadness",)

    def test_no_fallback_when_primary_succeeds(self):
        def transport(url, payload, headers, timeout):
            return json.dumps(
                {"valence": 0, "arousal": 0, "labels": ["neutral"], "confidence": 0.7}
            ).encode()

        remote = RemoteAnalyzer("http://example/api", transport=transport)
        te, degraded = analyze_with_fallback(remote, LexiconAnalyzer(), CTX, "so sad")
        assert not degraded
        assert te.labels == ("neutral",)

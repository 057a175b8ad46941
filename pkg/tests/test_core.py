import random

import pytest

from emochat.core import (
    ChatMessage,
    EmotionAnnotation,
    EmotionPrediction,
    KeyEvent,
    MessageEventWindow,
    NonMonotonicClock,
    segment_by_message,
    validate_event_stream,
)


def ev(key, action, t, session="s", user="u"):
    return KeyEvent(session_id=session, user_id=user, key=key, action=action, t_ms=t)


class TestTypes:
    def test_key_event_rejects_bad_action(self):
        with pytest.raises(ValueError):
            ev("a", "tap", 0)

    def test_key_event_rejects_empty_key_and_negative_time(self):
        with pytest.raises(ValueError):
            ev("", "press", 0)
        with pytest.raises(ValueError):
            ev("a", "press", -1)

    def test_named_keys_accepted(self):
        for key in ("Backspace", "Enter", "ArrowLeft", "Other"):
            assert ev(key, "press", 1).key == key

    def test_chat_message_length_cap(self):
        with pytest.raises(ValueError):
            ChatMessage("m1", "s", "client", "x" * 10_001, 0)

    def test_window_requires_sorted_events(self):
        with pytest.raises(ValueError):
            MessageEventWindow("m1", (ev("a", "press", 10), ev("a", "release", 5)))

    def test_annotation_label_rules(self):
        EmotionAnnotation("m1", 0, 1, ("anger", "fear"), "a1")
        with pytest.raises(ValueError):
            EmotionAnnotation("m1", 0, 0, (), "a1")
        with pytest.raises(ValueError):
            EmotionAnnotation("m1", 0, 0, ("anger", "anger"), "a1")
        with pytest.raises(ValueError):
            EmotionAnnotation("m1", 2, 0, ("anger",), "a1")
        with pytest.raises(ValueError):
            EmotionAnnotation("m1", 0, 0, ("anger", "fear", "joy", "sadness"), "a1")

    def test_prediction_requires_sorted_confidences(self):
        with pytest.raises(ValueError):
            EmotionPrediction("m1", 0, 0.5, 0, 0.5, (("anger", 0.2), ("fear", 0.9)), "kd")


class TestValidateEventStream:
    def test_matched_pair_is_clean(self):
        out = validate_event_stream([ev("h", "press", 0), ev("h", "release", 80)])
        assert len(out.events) == 2
        assert out.orphan_count == 0
        assert out.unclosed_press_count == 0

    def test_orphan_release_removed_and_counted(self):
        out = validate_event_stream([ev("x", "release", 10)])
        assert out.events == ()
        assert out.orphan_count == 1

    def test_small_regression_reordered(self):
        out = validate_event_stream([ev("a", "press", 100), ev("b", "press", 50)])
        assert [e.key for e in out.events] == ["b", "a"]
        assert len(out.events) == 2
        assert out.unclosed_press_count == 2

    def test_clock_reset_raises(self):
        with pytest.raises(NonMonotonicClock):
            validate_event_stream([ev("a", "press", 10_000), ev("b", "press", 100)])

    def test_regression_at_threshold_is_tolerated(self):
        out = validate_event_stream([ev("a", "press", 5_000), ev("b", "press", 0)])
        assert [e.key for e in out.events] == ["b", "a"]

    def test_empty_stream_is_not_an_error(self):
        assert validate_event_stream([]) .events == ()

    def test_idempotent(self):
        rng = random.Random(7)
        for _ in range(50):
            events = []
            t = 0.0
            for _ in range(rng.randrange(0, 30)):
                t += rng.uniform(0, 50)
                key = rng.choice("abcde")
                action = rng.choice(["press", "release"])
                events.append(ev(key, action, t))
            once = validate_event_stream(events)
            twice = validate_event_stream(list(once.events))
            assert twice.events == once.events
            assert twice.orphan_count == 0


class TestSegmentByMessage:
    def test_single_window(self):
        stream = validate_event_stream([ev("a", "press", 10), ev("a", "release", 20)])
        windows, tail = segment_by_message(stream, [("m1", 30)])
        assert [e.t_ms for e in windows[0].events] == [10, 20]
        assert tail == []

    def test_boundary_assignment(self):
        stream = validate_event_stream([ev("a", "press", 10), ev("b", "press", 40)])
        windows, tail = segment_by_message(stream, [("m1", 30), ("m2", 60)])
        assert [e.t_ms for e in windows[0].events] == [10]
        assert [e.t_ms for e in windows[1].events] == [40]
        assert tail == []

    def test_send_enter_release_follows_its_press(self):
        stream = validate_event_stream(
            [ev("Enter", "press", 29), ev("Enter", "release", 31)]
        )
        windows, tail = segment_by_message(stream, [("m1", 30)])
        assert [e.key for e in windows[0].events] == ["Enter", "Enter"]
        assert tail == []

    def test_events_after_last_send_are_held(self):
        stream = validate_event_stream([ev("a", "press", 10), ev("b", "press", 99)])
        windows, tail = segment_by_message(stream, [("m1", 50)])
        assert [e.t_ms for e in windows[0].events] == [10]
        assert [e.t_ms for e in tail] == [99]

    def test_send_times_must_increase(self):
        stream = validate_event_stream([])
        with pytest.raises(ValueError):
            segment_by_message(stream, [("m1", 30), ("m2", 30)])

    def test_partition_property(self):
        rng = random.Random(13)
        for _ in range(40):
            events = []
            t = 0.0
            for _ in range(rng.randrange(0, 60)):
                t += rng.uniform(0, 40)
                key = rng.choice(["a", "b", "Enter", "Backspace"])
                events.append(ev(key, rng.choice(["press", "release"]), t))
            stream = validate_event_stream(events)
            cuts, ct = [], 0.0
            for i in range(rng.randrange(1, 5)):
                ct += rng.uniform(10, 400)
                cuts.append((f"m{i}", ct))
            windows, tail = segment_by_message(stream, cuts)
            assigned = [e for w in windows for e in w.events] + list(tail)
            assert sorted(assigned, key=lambda e: e.t_ms) == sorted(
                stream.events, key=lambda e: e.t_ms
            )
            assert len(assigned) == len(stream.events)

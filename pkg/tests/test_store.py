import json
import threading

import pytest

from scenic.store import (
    IntegrityError,
    JourneyStore,
    ReflectionSummary,
    SessionNotFound,
    StoreError,
    canonical_json,
    render_transcript,
    summarize,
)
from scenic.strategies import DevelopmentalGoal


def entry(seq, kind, payload, ts=0.0):
    return {"seq": seq, "ts": ts, "kind": kind, "payload": payload}


def prompt_entry(seq, pid, goal, poi="p1"):
    return entry(seq, "prompt", {
        "prompt": {"id": pid, "goal": goal, "poi_id": poi, "strategy": "inference",
                   "text": "Why?", "bloom": "analyze", "choices": None,
                   "hint_image_spec": "spec", "used_fallback": False},
        "slot": seq,
    })


def answer_entry(seq, pid, accepted_as="answer"):
    return entry(seq, "answer_ack", {
        "prompt_id": pid, "transcript": "because", "accepted_as": accepted_as,
    })


def approach_entry(seq, poi):
    return entry(seq, "segment", {
        "segment": {"id": f"seg-{seq}", "kind": "approach", "poi_id": poi, "text": "Look!"},
    })


class TestWriterAndLoader:
    def test_append_and_load_roundtrip(self, tmp_path):
        store = JourneyStore(tmp_path)
        writer = store.create("s1", {"theme": "nature"})
        entries = [entry(i, "state_change", {"to": f"st{i}"}) for i in range(3)]
        for e in entries:
            writer.append(e)
        writer.close()
        header, loaded = store.load_session("s1")
        assert header["version"] == 1
        assert header["session_id"] == "s1"
        assert header["theme"] == "nature"
        assert loaded == entries

    def test_seq_gap_rejected(self, tmp_path):
        writer = JourneyStore(tmp_path).create("s1", {})
        writer.append(entry(0, "state_change", {}))
        with pytest.raises(StoreError):
            writer.append(entry(2, "state_change", {}))

    def test_unknown_kind_rejected(self, tmp_path):
        writer = JourneyStore(tmp_path).create("s1", {})
        with pytest.raises(StoreError):
            writer.append(entry(0, "telemetry", {}))

    def test_duplicate_session_rejected(self, tmp_path):
        store = JourneyStore(tmp_path)
        store.create("s1", {})
        with pytest.raises(StoreError):
            store.create("s1", {})

    def test_concurrent_sessions_are_independent(self, tmp_path):
        store = JourneyStore(tmp_path)
        writers = [store.create(f"s{i}", {}) for i in range(4)]

        def feed(writer):
            for i in range(50):
                writer.append(entry(i, "state_change", {"n": i}))

        threads = [threading.Thread(target=feed, args=(w,)) for w in writers]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        for i in range(4):
            _, loaded = store.load_session(f"s{i}")
            assert [e["seq"] for e in loaded] == list(range(50))

    def test_unknown_session(self, tmp_path):
        with pytest.raises(SessionNotFound):
            JourneyStore(tmp_path).load_session("nope")

    def test_truncated_file_names_last_good_seq(self, tmp_path):
        store = JourneyStore(tmp_path)
        writer = store.create("s1", {})
        for i in range(3):
            writer.append(entry(i, "state_change", {"n": i}))
        writer.close()
        path = store.path_for("s1")
        content = path.read_text()
        path.write_text(content[: len(content) - 9])  # chop the final line
        with pytest.raises(IntegrityError) as err:
            store.load_session("s1")
        assert err.value.last_good_seq == 1

    def test_unknown_major_version_rejected(self, tmp_path):
        store = JourneyStore(tmp_path)
        path = store.path_for("odd")
        path.write_text(canonical_json({"version": 9, "session_id": "odd"}) + "\n")
        with pytest.raises(StoreError):
            store.load_session("odd")


class TestSummarize:
    def test_empty_log_gives_zeros(self):
        summary = summarize([])
        assert summary.locations_interacted == 0
        assert summary.prompts_unanswered == 0
        assert all(v == 0 for v in summary.prompts_answered.values())
        assert summary.gallery == ()

    def test_goal_tallies_and_interactions(self):
        entries = [
            approach_entry(0, "p1"),
            prompt_entry(1, "q1", "creativity"),
            answer_entry(2, "q1"),
            approach_entry(3, "p2"),
            prompt_entry(4, "q2", "logical_ability"),
            answer_entry(5, "q2"),
            prompt_entry(6, "q3", "decision_making"),
        ]
        summary = summarize(entries)
        assert summary.locations_interacted == 2
        assert summary.prompts_answered[DevelopmentalGoal.CREATIVITY] == 1
        assert summary.prompts_answered[DevelopmentalGoal.LOGICAL_ABILITY] == 1
        assert summary.prompts_answered[DevelopmentalGoal.DECISION_MAKING] == 0
        assert summary.prompts_unanswered == 1

    def test_help_requests_excluded(self):
        entries = [
            prompt_entry(0, "q1", "creativity"),
            answer_entry(1, "q1", accepted_as="help"),
            answer_entry(2, "q1", accepted_as="help"),
            answer_entry(3, "q1", accepted_as="answer"),
        ]
        summary = summarize(entries)
        assert summary.prompts_answered[DevelopmentalGoal.CREATIVITY] == 1
        assert summary.prompts_unanswered == 0

    def test_gallery_taken_from_reflection_entry(self):
        entries = [
            approach_entry(0, "p1"),
            entry(1, "reflection", {"summary": {"gallery": [["p1", "mockimg/x.svg"]]}}),
        ]
        assert summarize(entries).gallery == (("p1", "mockimg/x.svg"),)


class TestReflectionSummary:
    def test_payload_roundtrip(self):
        summary = ReflectionSummary(
            locations_interacted=2,
            prompts_answered={DevelopmentalGoal.CREATIVITY: 3,
                              DevelopmentalGoal.LOGICAL_ABILITY: 4,
                              DevelopmentalGoal.DECISION_MAKING: 2},
            prompts_unanswered=1,
            gallery=(("p1", "mockimg/a.svg"),),
        )
        again = ReflectionSummary.from_payload(summary.to_payload())
        assert again == summary

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            ReflectionSummary(locations_interacted=-1, prompts_answered={}, prompts_unanswered=0)


class TestTranscript:
    def test_renders_main_kinds(self):
        header = {"session_id": "s1", "theme": "nature", "character": "rabbit", "seed": 1}
        entries = [
            approach_entry(0, "p1"),
            prompt_entry(1, "q1", "creativity"),
            answer_entry(2, "q1"),
            entry(3, "hint_image", {"prompt_id": "q1", "image_ref": "mockimg/h.svg"}),
            entry(4, "qa_answer", {"question": "Why?", "text": "Because."}),
        ]
        text = render_transcript(header, entries)
        assert "Look!" in text
        assert "Why?" in text
        assert "mockimg/h.svg" in text

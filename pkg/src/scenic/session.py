"""Session runtime: applies events through the orchestrator, writes the
journey log, schedules simulated follow-up events, and fans entries out to
stream subscribers.

Every accepted event becomes one or more log entries built by the pure
`build_entries`; replaying the recorded events through `handle_event`
rebuilds the exact same entries (see `replay_entries`).
"""
from __future__ import annotations

import heapq
import logging
import threading
from dataclasses import dataclass, field, replace

from .orchestrator import (
    AnswerChildQuestion,
    AnswerReceived,
    ChildQuestion,
    Effect,
    EmitHintImage,
    EmitPrompt,
    EmitSegment,
    EventRejected,
    FinishSession,
    LogAnswer,
    Phase,
    SegmentFinished,
    SessionDeps,
    SessionEvent,
    SessionStarted,
    SessionState,
    SilenceTimeout,
    StreamEnded,
    event_to_payload,
    handle_event,
)
from .store import JourneyLogWriter
from .simulator import AnswerScript

logger = logging.getLogger(__name__)

WORDS_PER_SECOND = 2.5
MIN_SEGMENT_SECONDS = 2.0
ANSWER_DELAY_SECONDS = 4.0


def speech_seconds(text: str) -> float:
    return max(MIN_SEGMENT_SECONDS, len(text.split()) / WORDS_PER_SECOND)


def build_entries(
    prev_state: SessionState,
    new_state: SessionState,
    event: SessionEvent,
    effects: list[Effect],
    seq_start: int,
) -> list[dict]:
    """Deterministic entry records for one applied event."""
    entries: list[dict] = []
    cause = event_to_payload(event)
    ts = event.ts

    def add(kind: str, payload: dict) -> None:
        entries.append(
            {"seq": seq_start + len(entries), "ts": ts, "kind": kind, "payload": payload}
        )

    if new_state != prev_state:
        flags = []
        if new_state.truncated and not prev_state.truncated:
            flags.append("truncated")
        add(
            "state_change",
            {
                "from": prev_state.to_string(),
                "to": new_state.to_string(),
                "progress": {
                    "offset": new_state.last_offset,
                    "speed": new_state.recent_speed,
                },
                "flags": flags,
                "cause": cause,
            },
        )

    for effect in effects:
        if isinstance(effect, EmitSegment):
            add("segment", {"segment": effect.segment.to_payload(), "cause": cause})
        elif isinstance(effect, EmitPrompt):
            add("prompt", {"prompt": effect.prompt.to_payload(), "slot": effect.slot,
                           "cause": cause})
        elif isinstance(effect, EmitHintImage):
            add("hint_image", {"prompt_id": effect.prompt_id, "image_ref": effect.image_ref,
                               "cause": cause})
        elif isinstance(effect, AnswerChildQuestion):
            add("qa_answer", {"question": effect.question, "text": effect.text, "cause": cause})
        elif isinstance(effect, LogAnswer):
            add("answer_ack", {"prompt_id": effect.prompt_id, "transcript": effect.transcript,
                               "accepted_as": effect.accepted_as, "cause": cause})
        elif isinstance(effect, FinishSession):
            add("reflection", {"summary": effect.summary.to_payload(), "cause": cause})
        else:  # pragma: no cover - exhaustiveness guard
            raise TypeError(f"unmapped effect {effect!r}")
    return entries


@dataclass
class AutoPilot:
    """Simulated playback behaviors: segments finish after their speech time,
    silence timers run, and scripted answers arrive on schedule."""

    script: AnswerScript | None = None
    silence_timeout_s: float = 10.0
    answer_delay_s: float = ANSWER_DELAY_SECONDS
    _audio_tail: float = 0.0

    def on_entries(self, runtime: "SessionRuntime", entries: list[dict]) -> None:
        for entry in entries:
            kind = entry["kind"]
            ts = entry["ts"]
            if kind == "segment":
                segment = entry["payload"]["segment"]
                finish = max(self._audio_tail, ts) + speech_seconds(segment["text"])
                self._audio_tail = finish
                runtime.schedule(finish, SegmentFinished(segment_id=segment["id"], ts=finish))
            elif kind == "prompt":
                prompt = entry["payload"]["prompt"]
                spoken = prompt["text"] + " ".join(
                    text for _, text in (prompt.get("choices") or [])
                )
                finish = max(self._audio_tail, ts) + speech_seconds(spoken)
                self._audio_tail = finish
                when = finish
                for record in self._records_for(entry["payload"]["slot"]):
                    if record.action == "silence":
                        continue
                    when += self.answer_delay_s
                    if record.action == "question":
                        runtime.schedule(when, ChildQuestion(transcript=record.text, ts=when))
                    else:  # answer, or help (with its spoken help phrase)
                        text = record.text if record.action == "answer" else (
                            record.text or "I have no idea."
                        )
                        if record.action == "help":
                            runtime.schedule(
                                when,
                                AnswerReceived(prompt_id=prompt["id"],
                                               transcript="I have no idea.", ts=when),
                            )
                            if record.text:
                                when += self.answer_delay_s
                                runtime.schedule(
                                    when,
                                    AnswerReceived(prompt_id=prompt["id"],
                                                   transcript=record.text, ts=when),
                                )
                        else:
                            runtime.schedule(
                                when,
                                AnswerReceived(prompt_id=prompt["id"], transcript=text, ts=when),
                            )
                runtime.schedule(
                    finish + self.silence_timeout_s,
                    SilenceTimeout(prompt_id=prompt["id"], ts=finish + self.silence_timeout_s),
                )
                runtime.schedule(
                    finish + 2 * self.silence_timeout_s,
                    SilenceTimeout(prompt_id=prompt["id"], ts=finish + 2 * self.silence_timeout_s),
                )

    def _records_for(self, slot: int):
        if self.script is None:
            return []
        return self.script.records_for(slot)


class SessionRuntime:
    """Single-writer event application for one session."""

    def __init__(
        self,
        session_id: str,
        deps: SessionDeps,
        writer: JourneyLogWriter | None = None,
        autopilot: AutoPilot | None = None,
    ):
        self.session_id = session_id
        self.deps = deps
        self.writer = writer
        self.autopilot = autopilot
        self.state = SessionState()
        self.entries: list[dict] = []
        self._lock = threading.RLock()
        self._event_counter = 0
        self._schedule_counter = 0
        self._scheduled: list[tuple[float, int, SessionEvent]] = []
        self._subscribers: list[threading.Condition] = []
        deps.log_view = lambda: self.entries

    # -- event application ----------------------------------------------

    def submit(self, event: SessionEvent) -> list[dict]:
        """Apply one event; returns the entries it produced."""
        with self._lock:
            if event.event_id is None:
                event = replace(event, event_id=f"e{self._event_counter}")
            self._event_counter += 1
            prev = self.state
            new_state, effects = handle_event(prev, event, self.deps)
            entries = build_entries(prev, new_state, event, effects, len(self.entries))
            for entry in entries:
                if self.writer is not None:
                    self.writer.append(entry)
                self.entries.append(entry)
            self.state = new_state
            if self.autopilot is not None and entries:
                self.autopilot.on_entries(self, entries)
        if entries:
            self._notify()
        return entries

    def schedule(self, ts: float, event: SessionEvent) -> None:
        with self._lock:
            self._schedule_counter += 1
            heapq.heappush(self._scheduled, (ts, self._schedule_counter, event))

    def advance_to(self, ts: float) -> None:
        """Apply every scheduled event due at or before ts, in time order."""
        while True:
            with self._lock:
                if not self._scheduled or self._scheduled[0][0] > ts:
                    return
                due_ts, _, event = heapq.heappop(self._scheduled)
            self._submit_scheduled(event)

    def _submit_scheduled(self, event: SessionEvent) -> None:
        try:
            self.submit(event)
        except EventRejected as exc:
            logger.debug("scheduled event dropped: %s", exc)

    def begin(self, ts: float = 0.0) -> None:
        if self.state.phase is Phase.CREATED:
            self.submit(SessionStarted(ts=ts))

    def finish_stream(self, ts: float) -> None:
        """Signal end of positions, then drain until the session completes."""
        if self.state.phase not in (Phase.REFLECTING, Phase.COMPLETED):
            self.submit(StreamEnded(ts=ts))
        while self.state.phase is not Phase.COMPLETED:
            with self._lock:
                if not self._scheduled:
                    break
                _, _, event = heapq.heappop(self._scheduled)
            self._submit_scheduled(event)
        self.drain()

    def drain(self) -> None:
        """Run remaining scheduled events (stale ones drop silently)."""
        while True:
            with self._lock:
                if not self._scheduled:
                    return
                _, _, event = heapq.heappop(self._scheduled)
            self._submit_scheduled(event)

    # -- streaming ---------------------------------------------------------

    def subscribe_condition(self) -> threading.Condition:
        cond = threading.Condition()
        with self._lock:
            self._subscribers.append(cond)
        return cond

    def unsubscribe(self, cond: threading.Condition) -> None:
        with self._lock:
            if cond in self._subscribers:
                self._subscribers.remove(cond)

    def entries_since(self, seq: int) -> list[dict]:
        with self._lock:
            return self.entries[seq:]

    def _notify(self) -> None:
        with self._lock:
            subscribers = list(self._subscribers)
        for cond in subscribers:
            with cond:
                cond.notify_all()

    @property
    def completed(self) -> bool:
        return self.state.phase is Phase.COMPLETED

    def close(self) -> None:
        if self.writer is not None:
            self.writer.close()


def replay_events(entries: list[dict]) -> list[SessionEvent]:
    """The distinct causal events recorded in a log, in application order."""
    from .orchestrator import event_from_payload

    events: list[SessionEvent] = []
    seen: set[str] = set()
    for entry in entries:
        cause = entry["payload"].get("cause")
        if cause is None or cause.get("event_id") in seen:
            continue
        seen.add(cause["event_id"])
        events.append(event_from_payload(cause))
    return events


def replay_entries(entries: list[dict], deps: SessionDeps) -> list[dict]:
    """Re-run the recorded events through a fresh state machine.

    Returns the rebuilt entry list; byte-equality with the original log is
    the replay-determinism check.
    """
    runtime = SessionRuntime("replay", deps, writer=None, autopilot=None)
    for event in replay_events(entries):
        runtime.submit(event)
    return runtime.entries

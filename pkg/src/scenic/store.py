"""Append-only journey logs: one JSON-lines file per session.

Line 0 is the header, every following line one entry {seq, ts, kind, payload}
with gapless sequence numbers. Logs are the substrate for replay, streaming
and reflection metrics; `summarize` recomputes the end-of-journey summary from
raw entries as an independent check on the reflection the session emitted.
"""
from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .strategies import DevelopmentalGoal

LOG_VERSION = 1

ENTRY_KINDS = (
    "segment",
    "prompt",
    "hint_image",
    "answer_ack",
    "qa_answer",
    "state_change",
    "reflection",
)


class StoreError(RuntimeError):
    pass


class SessionNotFound(StoreError):
    pass


class IntegrityError(StoreError):
    def __init__(self, message: str, last_good_seq: int):
        super().__init__(f"{message} (last good seq: {last_good_seq})")
        self.last_good_seq = last_good_seq


def canonical_json(obj) -> str:
    """Stable, compact serialization used for every log line."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass(frozen=True)
class ReflectionSummary:
    locations_interacted: int
    prompts_answered: dict[DevelopmentalGoal, int]
    prompts_unanswered: int
    gallery: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        if self.locations_interacted < 0 or self.prompts_unanswered < 0:
            raise ValueError("counts must be non-negative")
        if any(v < 0 for v in self.prompts_answered.values()):
            raise ValueError("counts must be non-negative")

    def to_payload(self) -> dict:
        return {
            "locations_interacted": self.locations_interacted,
            "prompts_answered": {g.value: self.prompts_answered.get(g, 0) for g in DevelopmentalGoal},
            "prompts_unanswered": self.prompts_unanswered,
            "gallery": [[poi_id, ref] for poi_id, ref in self.gallery],
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "ReflectionSummary":
        return cls(
            locations_interacted=payload["locations_interacted"],
            prompts_answered={
                DevelopmentalGoal(k): v for k, v in payload["prompts_answered"].items()
            },
            prompts_unanswered=payload["prompts_unanswered"],
            gallery=tuple((p, r) for p, r in payload.get("gallery", [])),
        )


class JourneyLogWriter:
    """Single-writer appender for one session's log file."""

    def __init__(self, path: Path, header: dict):
        self.path = path
        self._lock = threading.Lock()
        self._last_seq = -1
        self._file = open(path, "x", encoding="utf-8")
        self._file.write(canonical_json(header) + "\n")
        self._file.flush()

    @property
    def last_seq(self) -> int:
        return self._last_seq

    def append(self, entry: dict) -> None:
        with self._lock:
            seq = entry.get("seq")
            if seq != self._last_seq + 1:
                raise StoreError(
                    f"sequence gap: expected {self._last_seq + 1}, got {seq}"
                )
            if entry.get("kind") not in ENTRY_KINDS:
                raise StoreError(f"unknown entry kind {entry.get('kind')!r}")
            try:
                self._file.write(canonical_json(entry) + "\n")
                self._file.flush()
            except OSError as exc:
                raise StoreError(f"write failed: {exc}") from exc
            self._last_seq = seq

    def close(self) -> None:
        with self._lock:
            if not self._file.closed:
                self._file.flush()
                os.fsync(self._file.fileno())
                self._file.close()


@dataclass
class JourneyStore:
    """Directory of session logs, one writer per session, many readers."""

    root: Path
    _writers: dict[str, JourneyLogWriter] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.root = Path(self.root)
        self.root.mkdir(parents=True, exist_ok=True)

    def path_for(self, session_id: str) -> Path:
        return self.root / f"{session_id}.jsonl"

    def create(self, session_id: str, header: dict) -> JourneyLogWriter:
        path = self.path_for(session_id)
        if path.exists():
            raise StoreError(f"session {session_id} already exists")
        full_header = {"version": LOG_VERSION, "session_id": session_id, **header}
        writer = JourneyLogWriter(path, full_header)
        self._writers[session_id] = writer
        return writer

    def session_ids(self) -> list[str]:
        return sorted(p.stem for p in self.root.glob("*.jsonl"))

    def load_session(self, session_id: str) -> tuple[dict, list[dict]]:
        path = self.path_for(session_id)
        if not path.exists():
            raise SessionNotFound(f"unknown session {session_id}")
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        if not lines:
            raise IntegrityError(f"{path} is empty", last_good_seq=-1)
        try:
            header = json.loads(lines[0])
        except json.JSONDecodeError as exc:
            raise IntegrityError(f"{path} header unreadable: {exc}", last_good_seq=-1) from exc
        version = header.get("version")
        if version != LOG_VERSION:
            raise StoreError(f"unsupported log version {version!r} (expected {LOG_VERSION})")
        entries: list[dict] = []
        expected = 0
        for line_no, line in enumerate(lines[1:], start=2):
            try:
                entry = json.loads(line)
            except json.JSONDecodeError as exc:
                raise IntegrityError(
                    f"{path} line {line_no} truncated or corrupt: {exc}",
                    last_good_seq=expected - 1,
                ) from exc
            if entry.get("seq") != expected:
                raise IntegrityError(
                    f"{path} line {line_no} has seq {entry.get('seq')}, expected {expected}",
                    last_good_seq=expected - 1,
                )
            entries.append(entry)
            expected += 1
        return header, entries


def summarize(entries: list[dict]) -> ReflectionSummary:
    """Recompute the reflection summary from raw log entries.

    Help requests are excluded from answered counts; gallery refs are taken
    from the logged reflection (they come from the image provider and cannot
    be derived from counts alone).
    """
    prompt_goal: dict[str, DevelopmentalGoal] = {}
    interacted: list[str] = []
    answered: dict[DevelopmentalGoal, int] = {g: 0 for g in DevelopmentalGoal}
    answered_total = 0
    gallery: tuple[tuple[str, str], ...] = ()

    for entry in entries:
        kind = entry.get("kind")
        payload = entry.get("payload", {})
        if kind == "prompt":
            prompt = payload["prompt"]
            prompt_goal[prompt["id"]] = DevelopmentalGoal(prompt["goal"])
        elif kind == "segment":
            segment = payload["segment"]
            if segment["kind"] == "approach" and segment.get("poi_id") not in interacted:
                interacted.append(segment["poi_id"])
        elif kind == "answer_ack" and payload.get("accepted_as") == "answer":
            goal = prompt_goal.get(payload["prompt_id"])
            if goal is not None:
                answered[goal] += 1
                answered_total += 1
        elif kind == "reflection":
            gallery = tuple(
                (p, r) for p, r in payload.get("summary", {}).get("gallery", [])
            )

    return ReflectionSummary(
        locations_interacted=len(interacted),
        prompts_answered=answered,
        prompts_unanswered=len(prompt_goal) - answered_total,
        gallery=gallery,
    )


def render_transcript(header: dict, entries: list[dict]) -> str:
    """Human-readable transcript of one logged session."""
    lines = [
        f"session {header.get('session_id')}  theme={header.get('theme')}"
        f"  character={header.get('character')}  seed={header.get('seed')}",
        "-" * 72,
    ]
    for entry in entries:
        kind = entry["kind"]
        payload = entry.get("payload", {})
        ts = entry.get("ts", 0.0)
        stamp = f"[{ts:9.1f}s]"
        if kind == "segment":
            seg = payload["segment"]
            lines.append(f"{stamp} ({seg['kind']}) {seg['text']}")
        elif kind == "prompt":
            prompt = payload["prompt"]
            lines.append(f"{stamp} (prompt/{prompt['strategy']}) {prompt['text']}")
            for label, text in prompt.get("choices") or []:
                lines.append(f"{'':12}   ({label}) {text}")
        elif kind == "answer_ack":
            tag = "child/help" if payload.get("accepted_as") == "help" else "child"
            lines.append(f"{stamp} ({tag}) {payload.get('transcript', '')}")
        elif kind == "qa_answer":
            lines.append(f"{stamp} (child asks) {payload.get('question', '')}")
            lines.append(f"{stamp} (guide) {payload.get('text', '')}")
        elif kind == "hint_image":
            lines.append(f"{stamp} (hint image) {payload.get('image_ref', '')}")
        elif kind == "reflection":
            summary = payload.get("summary", {})
            lines.append(f"{stamp} (reflection) {canonical_json(summary)}")
    return "\n".join(lines) + "\n"

"""The per-session state machine.

`handle_event` is a pure transition: (state, event, deps) -> (state, effects).
All randomness lives in the seeded providers inside deps, so replaying a
recorded event sequence reproduces the recorded effects byte-for-byte.

Events that are merely stale (an out-of-order position fix, a silence timer
for a prompt that was already answered, a finish notice for a superseded
segment) are dropped silently: the state comes back unchanged with no
effects. Events that are structurally invalid for the current state raise
EventRejected and must not change anything.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable

from .pois import SelectedPoi
from .providers import ProviderHub
from .story import (
    StoryContext,
    StorySegment,
    compose_episode,
    compose_orientation,
    compose_reflection,
    episode_summary_line,
)
from .store import ReflectionSummary
from .strategies import CognitivePrompt, StrategyKind, generate_prompt

logger = logging.getLogger(__name__)

HELP_PHRASES = ("i don't know", "no idea", "help", "not sure", "dunno")


class Phase(str, Enum):
    CREATED = "created"
    ORIENTING = "orienting"
    CRUISING = "cruising"
    IN_EPISODE = "in_episode"
    CONVERSING = "conversing"
    REFLECTING = "reflecting"
    COMPLETED = "completed"


class EpisodePhase(str, Enum):
    APPROACH = "approach"
    INTRODUCTION = "introduction"
    NARRATION = "narration"


class EventRejected(RuntimeError):
    """The event is invalid for the current state; nothing changed."""


@dataclass(frozen=True)
class SessionState:
    phase: Phase = Phase.CREATED
    # CRUISING: index of the next POI; IN_EPISODE / CONVERSING: the current one
    poi_index: int = 0
    episode_phase: EpisodePhase | None = None
    truncated: bool = False
    prompts_remaining: int = 0
    awaiting_answer: bool = False
    active_prompt_id: str | None = None
    active_hint_spec: str | None = None
    hint_count: int = 0
    slot_cursor: int = 0
    prior_summary: str = ""
    last_offset: float | None = None
    last_ts: float | None = None
    recent_speed: float | None = None

    def to_string(self) -> str:
        if self.phase is Phase.IN_EPISODE:
            flag = ",truncated" if self.truncated else ""
            return f"in_episode(poi={self.poi_index},phase={self.episode_phase.value}{flag})"
        if self.phase is Phase.CONVERSING:
            return (
                f"conversing(poi={self.poi_index},remaining={self.prompts_remaining},"
                f"awaiting={'answer' if self.awaiting_answer else 'nothing'},slot={self.slot_cursor})"
            )
        if self.phase is Phase.CRUISING:
            return f"cruising(next_poi={self.poi_index})"
        return self.phase.value


# --- Events -----------------------------------------------------------------


@dataclass(frozen=True)
class SessionStarted:
    ts: float
    event_id: str | None = None


@dataclass(frozen=True)
class PositionUpdated:
    offset: float
    cross_track: float
    ts: float
    event_id: str | None = None


@dataclass(frozen=True)
class SegmentFinished:
    segment_id: str
    ts: float
    event_id: str | None = None


@dataclass(frozen=True)
class AnswerReceived:
    prompt_id: str
    transcript: str
    ts: float
    event_id: str | None = None


@dataclass(frozen=True)
class ChildQuestion:
    transcript: str
    ts: float
    event_id: str | None = None


@dataclass(frozen=True)
class HintRequested:
    ts: float
    event_id: str | None = None


@dataclass(frozen=True)
class SilenceTimeout:
    prompt_id: str
    ts: float
    event_id: str | None = None


@dataclass(frozen=True)
class ProviderReply:
    request_id: str
    payload: dict
    ts: float
    event_id: str | None = None


@dataclass(frozen=True)
class StreamEnded:
    ts: float
    event_id: str | None = None


SessionEvent = (
    SessionStarted
    | PositionUpdated
    | SegmentFinished
    | AnswerReceived
    | ChildQuestion
    | HintRequested
    | SilenceTimeout
    | ProviderReply
    | StreamEnded
)

_EVENT_TYPES = {
    SessionStarted: "session_started",
    PositionUpdated: "position",
    SegmentFinished: "segment_finished",
    AnswerReceived: "answer",
    ChildQuestion: "child_question",
    HintRequested: "hint_requested",
    SilenceTimeout: "silence_timeout",
    ProviderReply: "provider_reply",
    StreamEnded: "stream_ended",
}
_EVENT_CLASSES = {name: cls for cls, name in _EVENT_TYPES.items()}


def event_to_payload(event: SessionEvent) -> dict:
    payload = {"type": _EVENT_TYPES[type(event)]}
    for key, value in vars(event).items():
        payload[key] = value
    return payload


def event_from_payload(payload: dict) -> SessionEvent:
    data = dict(payload)
    cls = _EVENT_CLASSES[data.pop("type")]
    return cls(**data)


# --- Effects ----------------------------------------------------------------


@dataclass(frozen=True)
class EmitSegment:
    segment: StorySegment


@dataclass(frozen=True)
class EmitPrompt:
    prompt: CognitivePrompt
    slot: int


@dataclass(frozen=True)
class EmitHintImage:
    prompt_id: str
    image_ref: str


@dataclass(frozen=True)
class AnswerChildQuestion:
    question: str
    text: str


@dataclass(frozen=True)
class LogAnswer:
    prompt_id: str
    transcript: str
    accepted_as: str  # "answer" | "help"


@dataclass(frozen=True)
class FinishSession:
    summary: ReflectionSummary


Effect = EmitSegment | EmitPrompt | EmitHintImage | AnswerChildQuestion | LogAnswer | FinishSession


# --- Dependencies -----------------------------------------------------------


@dataclass(frozen=True)
class OrchestratorConfig:
    seconds_per_prompt: float = 45.0
    min_prompts: int = 1
    max_prompts: int = 3
    final_leg_max_prompts: int = 5
    fallback_speed: float = 8.0
    silence_timeout_s: float = 10.0
    arrival_margin: float = 200.0
    backstep_drop_m: float = 50.0
    help_phrases: tuple[str, ...] = HELP_PHRASES


@dataclass
class SessionDeps:
    route_length: float
    pois: list[SelectedPoi]
    plan: list[StrategyKind]
    context: StoryContext
    hub: ProviderHub
    eta_seconds: float
    config: OrchestratorConfig = field(default_factory=OrchestratorConfig)
    log_view: Callable[[], list[dict]] = lambda: []


# --- Small helpers ----------------------------------------------------------


def prompt_budget(
    distance_to_next_trigger: float,
    recent_speed: float | None,
    config: OrchestratorConfig,
    final_leg: bool = False,
) -> int:
    """How many prompts fit before the next trigger at the current pace."""
    if distance_to_next_trigger < 0:
        raise ValueError("distance must be >= 0")
    speed = recent_speed if recent_speed and recent_speed > 0 else config.fallback_speed
    seconds = distance_to_next_trigger / speed
    budget = int(seconds // config.seconds_per_prompt)
    cap = config.final_leg_max_prompts if final_leg else config.max_prompts
    return max(config.min_prompts, min(cap, budget))


def _normalize(text: str) -> str:
    return re.sub(r"[^a-z0-9]+", " ", text.lower()).strip()


def detect_help_request(transcript: str, phrases: tuple[str, ...] = HELP_PHRASES) -> bool:
    """True when the child is asking for help rather than answering."""
    normalized = _normalize(transcript)
    if not normalized:
        return False
    return any(_normalize(p) in normalized for p in phrases)


# --- Transition function ----------------------------------------------------


def handle_event(
    state: SessionState, event: SessionEvent, deps: SessionDeps
) -> tuple[SessionState, list[Effect]]:
    if state.phase is Phase.COMPLETED:
        raise EventRejected(f"session completed; {_EVENT_TYPES[type(event)]} not accepted")

    if isinstance(event, SessionStarted):
        if state.phase is not Phase.CREATED:
            raise EventRejected("session already started")
        return _start(state, deps)
    if isinstance(event, PositionUpdated):
        return _on_position(state, event, deps)
    if isinstance(event, SegmentFinished):
        return _on_segment_finished(state, event, deps)
    if isinstance(event, AnswerReceived):
        return _on_answer(state, event, deps)
    if isinstance(event, ChildQuestion):
        return _on_child_question(state, event, deps)
    if isinstance(event, HintRequested):
        return _on_hint_requested(state, event, deps)
    if isinstance(event, SilenceTimeout):
        return _on_silence_timeout(state, event, deps)
    if isinstance(event, StreamEnded):
        return _on_stream_ended(state, event, deps)
    if isinstance(event, ProviderReply):
        raise EventRejected("providers are invoked synchronously; no reply expected")
    raise EventRejected(f"unknown event {event!r}")


def _start(state: SessionState, deps: SessionDeps) -> tuple[SessionState, list[Effect]]:
    segment = compose_orientation(deps.pois, deps.eta_seconds, deps.context, deps.hub.text)
    return replace(state, phase=Phase.ORIENTING), [EmitSegment(segment)]


def _track(state: SessionState, event: PositionUpdated) -> SessionState:
    speed = state.recent_speed
    if state.last_offset is not None and state.last_ts is not None and event.ts > state.last_ts:
        speed = (event.offset - state.last_offset) / (event.ts - state.last_ts)
    return replace(state, last_offset=event.offset, last_ts=event.ts, recent_speed=speed)


def _on_position(
    state: SessionState, event: PositionUpdated, deps: SessionDeps
) -> tuple[SessionState, list[Effect]]:
    if (
        state.last_offset is not None
        and event.offset < state.last_offset - deps.config.backstep_drop_m
    ):
        logger.warning(
            "dropping out-of-order position: offset %.1f after %.1f",
            event.offset,
            state.last_offset,
        )
        return state, []

    if state.phase is Phase.CREATED:
        started, effects = _start(state, deps)
        return _track(started, event), effects

    state = _track(state, event)

    if state.phase is Phase.CRUISING:
        nxt = state.poi_index
        if nxt < len(deps.pois) and event.offset >= deps.pois[nxt].trigger_offset:
            return _enter_episode(state, nxt, deps, truncated=False)
        if nxt >= len(deps.pois) and _arrived(event.offset, deps):
            return _enter_reflecting(state, deps)
        return state, []

    if state.phase is Phase.CONVERSING:
        nxt = state.poi_index + 1
        if nxt < len(deps.pois) and event.offset >= deps.pois[nxt].trigger_offset:
            # next trigger overran the conversation: truncate the new episode
            return _enter_episode(state, nxt, deps, truncated=True)
        if nxt >= len(deps.pois) and _arrived(event.offset, deps):
            return _enter_reflecting(state, deps)
        return state, []

    return state, []  # ORIENTING / IN_EPISODE / REFLECTING track progress only


def _arrived(offset: float, deps: SessionDeps) -> bool:
    return offset >= deps.route_length - deps.config.arrival_margin


def _compose_for(state_index: int, deps: SessionDeps, prior_summary: str):
    prev_type = (
        deps.pois[state_index - 1].candidate.type_tag if state_index > 0 else None
    )
    context = replace(deps.context, prior_episode_summary=prior_summary)
    return compose_episode(
        deps.pois[state_index],
        context,
        deps.hub.knowledge,
        deps.hub.text,
        episode_index=state_index,
        prev_type_tag=prev_type,
    )


def _enter_episode(
    state: SessionState, index: int, deps: SessionDeps, truncated: bool
) -> tuple[SessionState, list[Effect]]:
    episode = _compose_for(index, deps, state.prior_summary)
    effects: list[Effect] = []
    if episode.transition is not None and not truncated:
        effects.append(EmitSegment(episode.transition))
    effects.append(EmitSegment(episode.approach))
    new_state = replace(
        state,
        phase=Phase.IN_EPISODE,
        poi_index=index,
        episode_phase=EpisodePhase.APPROACH,
        truncated=truncated,
        awaiting_answer=False,
        active_prompt_id=None,
        active_hint_spec=None,
        hint_count=0,
    )
    return new_state, effects


def _on_segment_finished(
    state: SessionState, event: SegmentFinished, deps: SessionDeps
) -> tuple[SessionState, list[Effect]]:
    if state.phase is Phase.CREATED:
        raise EventRejected("no segment has been emitted yet")

    if state.phase is Phase.ORIENTING:
        if event.segment_id != "seg-orientation":
            return _drop_segment(state, event)
        return replace(state, phase=Phase.CRUISING, poi_index=0), []

    if state.phase is Phase.IN_EPISODE:
        i = state.poi_index
        if event.segment_id == f"seg-{i}-transition":
            return state, []  # transition lines advance nothing
        expected = f"seg-{i}-{state.episode_phase.value}"
        if event.segment_id != expected:
            return _drop_segment(state, event)
        episode = _compose_for(i, deps, state.prior_summary)
        if state.episode_phase is EpisodePhase.APPROACH:
            return (
                replace(state, episode_phase=EpisodePhase.INTRODUCTION),
                [EmitSegment(episode.introduction)],
            )
        if state.episode_phase is EpisodePhase.INTRODUCTION:
            if state.truncated:
                return _enter_conversing(state, deps)
            return (
                replace(state, episode_phase=EpisodePhase.NARRATION),
                [EmitSegment(episode.narration)],
            )
        return _enter_conversing(state, deps)  # narration finished

    if state.phase is Phase.REFLECTING:
        if event.segment_id != "seg-reflection":
            return _drop_segment(state, event)
        _, summary = _reflection(deps)
        return replace(state, phase=Phase.COMPLETED), [FinishSession(summary)]

    return _drop_segment(state, event)


def _drop_segment(state: SessionState, event: SegmentFinished) -> tuple[SessionState, list[Effect]]:
    logger.debug("ignoring stale segment finish %s in %s", event.segment_id, state.to_string())
    return state, []


def _enter_conversing(state: SessionState, deps: SessionDeps) -> tuple[SessionState, list[Effect]]:
    i = state.poi_index
    offset = state.last_offset if state.last_offset is not None else deps.pois[i].offset
    if i + 1 < len(deps.pois):
        distance = max(0.0, deps.pois[i + 1].trigger_offset - offset)
        final_leg = False
    else:
        distance = max(0.0, deps.route_length - deps.config.arrival_margin - offset)
        final_leg = True
    budget = prompt_budget(distance, state.recent_speed, deps.config, final_leg=final_leg)
    base = replace(
        state,
        phase=Phase.CONVERSING,
        episode_phase=None,
        prompts_remaining=budget,
        prior_summary=episode_summary_line(deps.pois[i]),
    )
    return _emit_next_prompt(base, deps)


def _emit_next_prompt(state: SessionState, deps: SessionDeps) -> tuple[SessionState, list[Effect]]:
    slot = state.slot_cursor
    strategy = deps.plan[slot % len(deps.plan)]
    prompt = generate_prompt(
        deps.pois[state.poi_index].candidate,
        deps.context.theme,
        deps.context.character,
        strategy,
        deps.hub.text,
        slot=slot,
    )
    new_state = replace(
        state,
        awaiting_answer=True,
        active_prompt_id=prompt.id,
        active_hint_spec=prompt.hint_image_spec,
        hint_count=0,
        slot_cursor=slot + 1,
    )
    return new_state, [EmitPrompt(prompt, slot)]


def _advance_conversation(
    state: SessionState, deps: SessionDeps
) -> tuple[SessionState, list[Effect]]:
    remaining = state.prompts_remaining - 1
    if remaining <= 0:
        return (
            replace(
                state,
                phase=Phase.CRUISING,
                poi_index=state.poi_index + 1,
                prompts_remaining=0,
                awaiting_answer=False,
                active_prompt_id=None,
                active_hint_spec=None,
                hint_count=0,
            ),
            [],
        )
    return _emit_next_prompt(replace(state, prompts_remaining=remaining), deps)


def _on_answer(
    state: SessionState, event: AnswerReceived, deps: SessionDeps
) -> tuple[SessionState, list[Effect]]:
    if state.phase is not Phase.CONVERSING or not state.awaiting_answer:
        raise EventRejected("no prompt is awaiting an answer")
    if event.prompt_id != state.active_prompt_id:
        raise EventRejected(
            f"answer targets {event.prompt_id}, active prompt is {state.active_prompt_id}"
        )
    if detect_help_request(event.transcript, deps.config.help_phrases):
        ref = deps.hub.image.image(state.active_hint_spec or "hint card")
        effects = [
            LogAnswer(event.prompt_id, event.transcript, "help"),
            EmitHintImage(event.prompt_id, ref),
        ]
        return replace(state, hint_count=state.hint_count + 1), effects

    ack = LogAnswer(event.prompt_id, event.transcript, "answer")
    new_state, effects = _advance_conversation(state, deps)
    return new_state, [ack, *effects]


def _on_child_question(
    state: SessionState, event: ChildQuestion, deps: SessionDeps
) -> tuple[SessionState, list[Effect]]:
    if state.phase not in (Phase.CRUISING, Phase.CONVERSING):
        raise EventRejected("free questions are only answered while cruising or conversing")
    poi_index = min(state.poi_index, len(deps.pois) - 1)
    fields = {
        "question": event.transcript,
        "character": deps.context.character.display_name,
        "theme": deps.context.theme.value,
    }
    if deps.pois:
        poi = deps.pois[poi_index].candidate
        facts = deps.hub.knowledge.facts(poi.id, poi.type_tag)
    else:
        facts = []
    if facts:
        fields["fact"] = facts[0].text
        result = deps.hub.text.generate("qa", "default", fields, salt=event.transcript)
    else:
        result = deps.hub.text.generate("qa", "nofact", fields, salt=event.transcript)
    return state, [AnswerChildQuestion(event.transcript, result.text)]


def _on_hint_requested(
    state: SessionState, event: HintRequested, deps: SessionDeps
) -> tuple[SessionState, list[Effect]]:
    if state.phase is not Phase.CONVERSING or not state.awaiting_answer:
        raise EventRejected("no prompt to hint at")
    ref = deps.hub.image.image(state.active_hint_spec or "hint card")
    return (
        replace(state, hint_count=state.hint_count + 1),
        [EmitHintImage(state.active_prompt_id, ref)],
    )


def _on_silence_timeout(
    state: SessionState, event: SilenceTimeout, deps: SessionDeps
) -> tuple[SessionState, list[Effect]]:
    if (
        state.phase is not Phase.CONVERSING
        or not state.awaiting_answer
        or event.prompt_id != state.active_prompt_id
    ):
        logger.debug("ignoring stale silence timeout for %s", event.prompt_id)
        return state, []
    if state.hint_count == 0:
        ref = deps.hub.image.image(state.active_hint_spec or "hint card")
        return (
            replace(state, hint_count=1),
            [EmitHintImage(event.prompt_id, ref)],
        )
    # hinted already and still silent: drop the prompt (stays unanswered)
    return _advance_conversation(state, deps)


def _on_stream_ended(
    state: SessionState, event: StreamEnded, deps: SessionDeps
) -> tuple[SessionState, list[Effect]]:
    if state.phase is Phase.REFLECTING:
        return state, []
    return _enter_reflecting(state, deps)


def _reflection(deps: SessionDeps) -> tuple[StorySegment, ReflectionSummary]:
    entries = deps.log_view()
    interacted: list[str] = []
    for entry in entries:
        if entry["kind"] == "segment" and entry["payload"]["segment"]["kind"] == "approach":
            poi_id = entry["payload"]["segment"].get("poi_id")
            if poi_id not in interacted:
                interacted.append(poi_id)
    names = {p.candidate.id: p.candidate.name for p in deps.pois}
    character = deps.context.character.display_name
    gallery = [
        (poi_id, deps.hub.image.image(f"{character} at {names.get(poi_id, poi_id)} gallery card"))
        for poi_id in interacted
    ]
    return compose_reflection(entries, gallery, deps.context, deps.hub.text)


def _enter_reflecting(state: SessionState, deps: SessionDeps) -> tuple[SessionState, list[Effect]]:
    segment, _ = _reflection(deps)
    new_state = replace(
        state,
        phase=Phase.REFLECTING,
        awaiting_answer=False,
        active_prompt_id=None,
        active_hint_spec=None,
    )
    return new_state, [EmitSegment(segment)]

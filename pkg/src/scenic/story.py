"""Narrative composition: orientation, per-POI episodes, transitions, the
ending reflection, and the child-appropriate style gate.

Every emitted segment must clear `style_lint` with zero hard violations; the
composer retries the text provider twice with a different variant salt, then
falls back to mechanical repair (jargon replacement and sentence splitting).
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources

from .pois import SelectedPoi
from .providers import Fact, MockKnowledgeProvider, MockTextProvider, Weather
from .store import ReflectionSummary
from .strategies import DevelopmentalGoal

MAX_SENTENCE_WORDS = 20
COMPOSE_RETRIES = 2


class StoryTheme(str, Enum):
    NATURE = "nature"
    HISTORY = "history"
    CREATIVITY = "creativity"
    SCIENCE = "science"


class Character(str, Enum):
    PIG = "pig"
    DOG = "dog"
    RABBIT = "rabbit"
    CAT = "cat"

    @property
    def display_name(self) -> str:
        return _DISPLAY_NAMES[self]


_DISPLAY_NAMES = {
    Character.PIG: "Penny the Pig",
    Character.DOG: "Scout the Dog",
    Character.RABBIT: "Hazel the Rabbit",
    Character.CAT: "Milo the Cat",
}


class SegmentKind(str, Enum):
    ORIENTATION = "orientation"
    APPROACH = "approach"
    INTRODUCTION = "introduction"
    NARRATION = "narration"
    TRANSITION = "transition"
    REFLECTION = "reflection"


@dataclass
class StoryContext:
    theme: StoryTheme
    character: Character
    weather: Weather = Weather.UNKNOWN
    prior_episode_summary: str = ""


@dataclass(frozen=True)
class StorySegment:
    id: str
    kind: SegmentKind
    text: str
    poi_id: str | None = None
    grounded_fact_ids: tuple[str, ...] = ()
    ungrounded: bool = False

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("segment text must be non-empty")
        if self.kind is SegmentKind.INTRODUCTION and not self.grounded_fact_ids and not self.ungrounded:
            raise ValueError("introductions carry fact ids or the ungrounded flag, never neither")

    def to_payload(self) -> dict:
        payload = {
            "id": self.id,
            "kind": self.kind.value,
            "text": self.text,
            "poi_id": self.poi_id,
        }
        if self.kind is SegmentKind.INTRODUCTION:
            payload["grounded_fact_ids"] = list(self.grounded_fact_ids)
            payload["ungrounded"] = self.ungrounded
        return payload


@dataclass(frozen=True)
class StyleViolation:
    severity: str  # "hard" | "soft"
    code: str
    detail: str


_WEATHER_CLAUSES = {
    Weather.CLEAR: "The sky is clear and bright. ",
    Weather.RAIN: "Raindrops race down our window. ",
    Weather.SNOW: "Snowflakes drift past the glass. ",
    Weather.CLOUDY: "Soft gray clouds roll along with us. ",
    Weather.UNKNOWN: "",
}

# POI types grouped into the scenery the child actually sees; a change of
# environment between consecutive episodes inserts a transition line.
_ENVIRONMENTS = {
    "park": "green parkland",
    "garden": "green parkland",
    "zoo": "green parkland",
    "museum": "streets of old treasures",
    "gallery": "streets of old treasures",
    "theater": "streets of old treasures",
    "bridge": "waterside",
    "harbor": "waterside",
    "fountain": "waterside",
    "aquarium": "waterside",
    "university": "campus streets",
    "school": "campus streets",
    "library": "campus streets",
    "temple": "old town lanes",
    "church": "old town lanes",
    "tower": "old town lanes",
    "market": "busy market streets",
    "hospital": "quiet streets",
}
_DEFAULT_ENVIRONMENT = "city streets"

_SIMILE_MARKERS = (" like ", " as if ", " as a ", " as the ")


def _jargon_terms() -> dict[str, str]:
    data = json.loads(
        resources.files("scenic.assets").joinpath("jargon.json").read_text(encoding="utf-8")
    )
    return data["terms"]


_JARGON = _jargon_terms()


def environment_of(type_tag: str) -> str:
    return _ENVIRONMENTS.get(type_tag, _DEFAULT_ENVIRONMENT)


def split_sentences(text: str) -> list[str]:
    parts = re.split(r"(?<=[.!?])\s+", text.strip())
    return [p for p in parts if p]


def style_lint(text: str, kind: SegmentKind | None = None) -> list[StyleViolation]:
    """Check text against the child-listener style rules.

    Hard violations: any sentence over 20 words; any jargon-list term.
    Soft notice: a narration without a simile or metaphor marker.
    """
    violations: list[StyleViolation] = []
    for sentence in split_sentences(text):
        words = sentence.split()
        if len(words) > MAX_SENTENCE_WORDS:
            violations.append(
                StyleViolation("hard", "long-sentence", f"{len(words)} words: {sentence[:60]}...")
            )
    lowered = text.lower()
    for term in _JARGON:
        if term in lowered:
            violations.append(StyleViolation("hard", "jargon", term))
    if kind is SegmentKind.NARRATION:
        padded = f" {lowered} "
        if not any(marker in padded for marker in _SIMILE_MARKERS):
            violations.append(StyleViolation("soft", "missing-simile", "no simile or metaphor marker"))
    return violations


def hard_violations(text: str) -> list[StyleViolation]:
    return [v for v in style_lint(text) if v.severity == "hard"]


def _replace_jargon(text: str) -> str:
    for term, replacement in _JARGON.items():
        text = re.sub(re.escape(term), replacement, text, flags=re.IGNORECASE)
    return text


def _split_long_sentence(sentence: str) -> str:
    words = sentence.split()
    if len(words) <= MAX_SENTENCE_WORDS:
        return sentence
    # split at the comma or conjunction nearest the middle, else plain middle
    candidates = [i for i, w in enumerate(words[:-1]) if w.endswith(",") or w in ("and", "but")]
    mid = len(words) // 2
    cut = min(candidates, key=lambda i: abs(i - mid)) if candidates else mid - 1
    head = " ".join(words[: cut + 1]).rstrip(",")
    tail = " ".join(words[cut + 1 :])
    if head and head[-1] not in ".!?":
        head += "."
    tail = tail[0].upper() + tail[1:] if tail else tail
    return f"{head} {_split_long_sentence(tail)}"


def mechanical_repair(text: str) -> str:
    """Deterministic last-resort fix: swap jargon, split overlong sentences."""
    text = _replace_jargon(text)
    return " ".join(_split_long_sentence(s) for s in split_sentences(text))


def compose_text(provider: MockTextProvider, role: str, key: str, fields: dict, salt: str) -> str:
    """Provider text that is guaranteed free of hard style violations."""
    text = ""
    for attempt in range(COMPOSE_RETRIES + 1):
        attempt_salt = salt if attempt == 0 else f"{salt}/retry{attempt}"
        text = provider.generate(role, key, fields, salt=attempt_salt).text
        if not hard_violations(text):
            return text
    return mechanical_repair(text)


def _base_fields(context: StoryContext) -> dict:
    return {
        "character": context.character.display_name,
        "theme": context.theme.value,
        "weather_clause": _WEATHER_CLAUSES[context.weather],
    }


def compose_orientation(
    plan: list[SelectedPoi],
    eta_seconds: float,
    context: StoryContext,
    text_provider: MockTextProvider,
) -> StorySegment:
    """The journey opener: character, theme, planned stops and riding time."""
    eta_minutes = max(1, math.ceil(eta_seconds / 60.0))
    fields = _base_fields(context)
    fields["eta_minutes"] = eta_minutes
    fields["poi_count"] = len(plan)
    names = [p.candidate.name for p in plan]
    sentences = []
    for i, name in enumerate(names):
        if i == 0:
            sentences.append(f"First, {name}.")
        elif i == len(names) - 1:
            sentences.append(f"Finally, {name}.")
        else:
            sentences.append(f"Then {name}.")
    fields["poi_sentences"] = " ".join(sentences)
    key = "default" if plan else "empty"
    text = compose_text(text_provider, "orientation", key, fields, salt="orientation")
    return StorySegment(id="seg-orientation", kind=SegmentKind.ORIENTATION, text=text)


@dataclass(frozen=True)
class EpisodeSegments:
    approach: StorySegment
    introduction: StorySegment
    narration: StorySegment
    transition: StorySegment | None = None

    def in_order(self, truncated: bool = False) -> list[StorySegment]:
        segments = [] if self.transition is None else [self.transition]
        segments.append(self.approach)
        segments.append(self.introduction)
        if not truncated:
            segments.append(self.narration)
        return segments


def compose_episode(
    poi: SelectedPoi,
    context: StoryContext,
    knowledge_provider: MockKnowledgeProvider,
    text_provider: MockTextProvider,
    episode_index: int = 0,
    prev_type_tag: str | None = None,
) -> EpisodeSegments:
    """One location's story beats: optional transition, approach, grounded
    introduction, and plot narration."""
    cand = poi.candidate
    fields = _base_fields(context)
    fields["poi_name"] = cand.name
    fields["feature"] = text_provider.feature_for(cand.type_tag)

    transition = None
    if prev_type_tag is not None and environment_of(prev_type_tag) != environment_of(cand.type_tag):
        t_fields = dict(fields)
        t_fields["prev_env"] = environment_of(prev_type_tag)
        t_fields["next_env"] = environment_of(cand.type_tag)
        transition = StorySegment(
            id=f"seg-{episode_index}-transition",
            kind=SegmentKind.TRANSITION,
            text=compose_text(text_provider, "transition", "default", t_fields,
                              salt=f"transition-{episode_index}"),
            poi_id=cand.id,
        )

    approach = StorySegment(
        id=f"seg-{episode_index}-approach",
        kind=SegmentKind.APPROACH,
        text=compose_text(text_provider, "approach", "default", fields,
                          salt=f"approach-{episode_index}"),
        poi_id=cand.id,
    )

    facts: list[Fact] = knowledge_provider.facts(cand.id, cand.type_tag)
    if facts:
        i_fields = dict(fields)
        i_fields["fact"] = facts[0].text
        introduction = StorySegment(
            id=f"seg-{episode_index}-introduction",
            kind=SegmentKind.INTRODUCTION,
            text=compose_text(text_provider, "introduction", "default", i_fields,
                              salt=f"introduction-{episode_index}"),
            poi_id=cand.id,
            grounded_fact_ids=(facts[0].fact_id,),
        )
    else:
        introduction = StorySegment(
            id=f"seg-{episode_index}-introduction",
            kind=SegmentKind.INTRODUCTION,
            text=compose_text(text_provider, "introduction", "ungrounded", fields,
                              salt=f"introduction-{episode_index}"),
            poi_id=cand.id,
            ungrounded=True,
        )

    n_fields = dict(fields)
    n_fields["prior"] = (
        f"{context.prior_episode_summary} " if context.prior_episode_summary else ""
    )
    narration = StorySegment(
        id=f"seg-{episode_index}-narration",
        kind=SegmentKind.NARRATION,
        text=compose_text(text_provider, "narration", context.theme.value, n_fields,
                          salt=f"narration-{episode_index}"),
        poi_id=cand.id,
    )
    return EpisodeSegments(
        approach=approach, introduction=introduction, narration=narration, transition=transition
    )


def episode_summary_line(poi: SelectedPoi) -> str:
    """The continuity clause the next narration opens with."""
    return f"After the visit to {poi.candidate.name},"


def compose_reflection(
    entries: list[dict],
    gallery: list[tuple[str, str]],
    context: StoryContext,
    text_provider: MockTextProvider,
) -> tuple[StorySegment, ReflectionSummary]:
    """End-of-journey recap: per-goal answer counts plus the image gallery.

    Counts are tallied here directly from the raw log; `store.summarize`
    recomputes them independently as the cross-check.
    """
    goal_by_prompt: dict[str, DevelopmentalGoal] = {}
    answered = {g: 0 for g in DevelopmentalGoal}
    interacted: list[str] = []
    for entry in entries:
        payload = entry.get("payload", {})
        if entry["kind"] == "prompt":
            goal_by_prompt[payload["prompt"]["id"]] = DevelopmentalGoal(
                payload["prompt"]["goal"]
            )
        elif entry["kind"] == "segment" and payload["segment"]["kind"] == "approach":
            poi_id = payload["segment"].get("poi_id")
            if poi_id not in interacted:
                interacted.append(poi_id)
        elif entry["kind"] == "answer_ack" and payload.get("accepted_as") == "answer":
            goal = goal_by_prompt.get(payload.get("prompt_id"))
            if goal is not None:
                answered[goal] += 1

    kept_gallery = tuple((p, ref) for p, ref in gallery if p in interacted)
    summary = ReflectionSummary(
        locations_interacted=len(interacted),
        prompts_answered=answered,
        prompts_unanswered=len(goal_by_prompt) - sum(answered.values()),
        gallery=kept_gallery,
    )
    fields = _base_fields(context)
    fields["locations"] = summary.locations_interacted
    fields["answered"] = sum(answered.values())
    fields["goal_line"] = (
        f"You created {answered[DevelopmentalGoal.CREATIVITY]} ideas, "
        f"solved {answered[DevelopmentalGoal.LOGICAL_ABILITY]} puzzles "
        f"and made {answered[DevelopmentalGoal.DECISION_MAKING]} choices."
    )
    text = compose_text(text_provider, "reflection", "default", fields, salt="reflection")
    segment = StorySegment(id="seg-reflection", kind=SegmentKind.REFLECTION, text=text)
    return segment, summary

"""The six cognitive prompting strategies, their goals, and Bloom tagging.

Each journey slot gets one strategy; a seeded six-long ordering repeats in
blocks so every strategy appears before any repeats. Prompts are rendered
through the text provider's per-(strategy, POI type) templates and tagged with
a Bloom level by a small deterministic rubric.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum

from .pois import PoiCandidate
from .providers import MockTextProvider, stable_hash
from .stats import BloomLevel


class StrategyKind(str, Enum):
    SCENARIO_ROLE_PLAY = "role_play"
    CLASSIFICATION = "classification"
    EXPANDED_THINKING = "expanded_thinking"
    NORMATIVE_SELF_REGULATION = "normative_self_regulation"
    INFERENCE = "inference"
    CONSTRAINED_CHOICE = "constrained_choice"


class DevelopmentalGoal(str, Enum):
    CREATIVITY = "creativity"
    LOGICAL_ABILITY = "logical_ability"
    DECISION_MAKING = "decision_making"


_GOALS = {
    StrategyKind.SCENARIO_ROLE_PLAY: DevelopmentalGoal.CREATIVITY,
    StrategyKind.EXPANDED_THINKING: DevelopmentalGoal.CREATIVITY,
    StrategyKind.CLASSIFICATION: DevelopmentalGoal.LOGICAL_ABILITY,
    StrategyKind.INFERENCE: DevelopmentalGoal.LOGICAL_ABILITY,
    StrategyKind.CONSTRAINED_CHOICE: DevelopmentalGoal.DECISION_MAKING,
    StrategyKind.NORMATIVE_SELF_REGULATION: DevelopmentalGoal.DECISION_MAKING,
}

CHOICE_STRATEGIES = frozenset(
    {
        StrategyKind.CLASSIFICATION,
        StrategyKind.NORMATIVE_SELF_REGULATION,
        StrategyKind.CONSTRAINED_CHOICE,
    }
)


def goal_of(strategy: StrategyKind) -> DevelopmentalGoal:
    """The developmental goal each strategy fosters (a 2/2/2 split)."""
    return _GOALS[strategy]


@dataclass(frozen=True)
class CognitivePrompt:
    id: str
    poi_id: str
    strategy: StrategyKind
    goal: DevelopmentalGoal
    text: str
    bloom: BloomLevel
    hint_image_spec: str
    choices: tuple[tuple[str, str], ...] | None = None
    used_fallback: bool = False

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("prompt text must be non-empty")
        if self.goal is not goal_of(self.strategy):
            raise ValueError(f"goal {self.goal} does not match strategy {self.strategy}")
        wants_choices = self.strategy in CHOICE_STRATEGIES
        if wants_choices and not self.choices:
            raise ValueError(f"{self.strategy.value} prompts need labeled choices")
        if not wants_choices and self.choices:
            raise ValueError(f"{self.strategy.value} prompts must not carry choices")

    def to_payload(self) -> dict:
        return {
            "id": self.id,
            "poi_id": self.poi_id,
            "strategy": self.strategy.value,
            "goal": self.goal.value,
            "text": self.text,
            "bloom": self.bloom.name.lower(),
            "hint_image_spec": self.hint_image_spec,
            "choices": None if self.choices is None else [list(c) for c in self.choices],
            "used_fallback": self.used_fallback,
        }


def plan_strategy_sequence(n_slots: int, seed: int) -> list[StrategyKind]:
    """A seeded ordering of all six strategies, repeated in blocks.

    Every window of six consecutive slots contains each strategy exactly once,
    and the first three slots always span all three developmental goals (so
    short journeys still get variety).
    """
    if n_slots < 0:
        raise ValueError("n_slots must be >= 0")
    if n_slots == 0:
        return []
    rng = random.Random(seed)
    order = list(StrategyKind)
    while True:
        rng.shuffle(order)
        if len({goal_of(s) for s in order[:3]}) == 3:
            break
    blocks = -(-n_slots // len(order))
    return (order * blocks)[:n_slots]


# Cue phrases checked in this order; the first category with a match wins,
# otherwise the strategy prior applies.
_BLOOM_CUES: tuple[tuple[BloomLevel, tuple[str, ...]], ...] = (
    (BloomLevel.REMEMBER, ("what is the name", "what's the name", "how many", "what color is")),
    (BloomLevel.ANALYZE, ("why do you think", "what would happen if")),
    (BloomLevel.EVALUATE, ("would you choose", "would you pick", "which one would you")),
    (BloomLevel.CREATE, ("imagine", "pretend", "make up a")),
)

_BLOOM_PRIORS = {
    StrategyKind.SCENARIO_ROLE_PLAY: BloomLevel.CREATE,
    StrategyKind.EXPANDED_THINKING: BloomLevel.CREATE,
    StrategyKind.INFERENCE: BloomLevel.ANALYZE,
    StrategyKind.CONSTRAINED_CHOICE: BloomLevel.EVALUATE,
    StrategyKind.CLASSIFICATION: BloomLevel.APPLY,
    StrategyKind.NORMATIVE_SELF_REGULATION: BloomLevel.UNDERSTAND,
}


def classify_bloom(prompt_text: str, strategy: StrategyKind) -> BloomLevel:
    """Rubric classifier: cue phrases override the per-strategy prior."""
    if not prompt_text:
        raise ValueError("prompt text must be non-empty")
    lowered = prompt_text.lower()
    for level, cues in _BLOOM_CUES:
        if any(cue in lowered for cue in cues):
            return level
    return _BLOOM_PRIORS[strategy]


def generate_prompt(
    poi: PoiCandidate,
    theme,
    character,
    strategy: StrategyKind,
    text_provider: MockTextProvider,
    slot: int = 0,
) -> CognitivePrompt:
    """Render one cognitive prompt for a POI through the text provider."""
    fields = {
        "poi_name": poi.name,
        "character": getattr(character, "display_name", str(character)),
        "theme": getattr(theme, "value", str(theme)),
        "feature": text_provider.feature_for(poi.type_tag),
    }
    result = text_provider.generate(
        role=strategy.value, key=poi.type_tag, fields=fields, salt=f"slot-{slot}"
    )
    choices = result.options if strategy in CHOICE_STRATEGIES else None
    head = " ".join(result.text.split()[:8])
    hint_spec = f"{fields['character']} at {poi.name}: a friendly picture hinting at '{head}'"
    prompt_id = f"prompt-{slot:03d}-{stable_hash(poi.id, strategy.value, slot) % 0xFFFF:04x}"
    return CognitivePrompt(
        id=prompt_id,
        poi_id=poi.id,
        strategy=strategy,
        goal=goal_of(strategy),
        text=result.text,
        bloom=classify_bloom(result.text, strategy),
        hint_image_spec=hint_spec,
        choices=choices,
        used_fallback=result.used_fallback,
    )

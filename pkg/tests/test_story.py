import pytest

from scenic.geo import GeoPoint
from scenic.pois import PoiCandidate, SelectedPoi
from scenic.providers import TemplateLibrary, Weather, mock_hub
from scenic.stats import BloomLevel
from scenic.story import (
    Character,
    SegmentKind,
    StoryContext,
    StorySegment,
    StoryTheme,
    compose_episode,
    compose_orientation,
    compose_reflection,
    compose_text,
    episode_summary_line,
    hard_violations,
    mechanical_repair,
    style_lint,
)
from scenic.strategies import DevelopmentalGoal


def selected(ident, name, type_tag, offset=2000.0):
    cand = PoiCandidate(id=ident, name=name, point=GeoPoint(31.2, 121.4), type_tag=type_tag)
    return SelectedPoi(candidate=cand, offset=offset, trigger_offset=offset - 100.0)


def ctx(theme=StoryTheme.HISTORY, character=Character.RABBIT, weather=Weather.CLEAR, prior=""):
    return StoryContext(theme=theme, character=character, weather=weather,
                        prior_episode_summary=prior)


PLAN5 = [
    selected("willow-park", "Willow Park", "park", 1500),
    selected("clockwork-museum", "Clockwork Museum", "museum", 3200),
    selected("stonebow-bridge", "Stonebow Bridge", "bridge", 4900),
    selected("red-lantern-library", "Red Lantern Library", "library", 6600),
    selected("northgate-university", "Northgate University", "university", 8300),
]


class TestStyleLint:
    def test_jargon_is_hard_violation(self):
        violations = style_lint("Our intelligent algorithms paint the city.")
        assert any(v.code == "jargon" and v.severity == "hard" for v in violations)

    def test_plain_sentence_is_clean(self):
        assert style_lint("The bunny hops along the path.") == []

    def test_long_sentence_flagged(self):
        long = " ".join(["word"] * 25) + "."
        violations = style_lint(long)
        assert any(v.code == "long-sentence" for v in violations)

    def test_narration_without_simile_is_soft_notice(self):
        violations = style_lint("The cat walks on.", kind=SegmentKind.NARRATION)
        assert any(v.code == "missing-simile" and v.severity == "soft" for v in violations)
        clean = style_lint("The cat walks on, quiet like a cloud.", kind=SegmentKind.NARRATION)
        assert not any(v.severity == "hard" for v in clean)

    def test_mechanical_repair_fixes_everything(self):
        ugly = ("The intelligent algorithms keep rendering the city while we ride along "
                "the endless avenue and count every single lamp post on both sides today.")
        fixed = mechanical_repair(ugly)
        assert hard_violations(fixed) == []

    def test_compose_text_repairs_injected_jargon(self):
        lib = TemplateLibrary(
            "[qa.default]\nOur intelligent algorithms know everything about {poi_name}.\n"
        )
        hub = mock_hub(seed=1, templates=lib)
        text = compose_text(hub.text, "qa", "default", {"poi_name": "the park"}, salt="x")
        assert hard_violations(text) == []
        assert "intelligent algorithms" not in text.lower()


class TestComposeOrientation:
    def test_names_count_and_eta(self):
        segment = compose_orientation(PLAN5, 1800.0, ctx(), mock_hub(seed=42).text)
        assert segment.kind is SegmentKind.ORIENTATION
        for poi in PLAN5:
            assert poi.candidate.name in segment.text
        assert "30" in segment.text
        assert "Hazel the Rabbit" in segment.text
        assert "history" in segment.text
        assert hard_violations(segment.text) == []

    def test_empty_plan_quiet_ride(self):
        segment = compose_orientation([], 600.0, ctx(), mock_hub(seed=42).text)
        assert "quiet" in segment.text
        for poi in PLAN5:
            assert poi.candidate.name not in segment.text

    def test_deterministic(self):
        a = compose_orientation(PLAN5, 1800.0, ctx(), mock_hub(seed=42).text)
        b = compose_orientation(PLAN5, 1800.0, ctx(), mock_hub(seed=42).text)
        assert a == b

    def test_eta_rounds_up(self):
        segment = compose_orientation(PLAN5, 1810.0, ctx(), mock_hub(seed=42).text)
        assert "31" in segment.text


class TestComposeEpisode:
    def test_approach_names_poi_and_looks_outward(self):
        episode = compose_episode(PLAN5[2], ctx(), mock_hub(seed=7).knowledge,
                                  mock_hub(seed=7).text, episode_index=2)
        assert "Stonebow Bridge" in episode.approach.text
        assert episode.approach.text.startswith("The sky is clear")
        assert "Look" in episode.approach.text

    def test_introduction_grounded_in_fact(self):
        hub = mock_hub(seed=7)
        episode = compose_episode(PLAN5[0], ctx(), hub.knowledge, hub.text)
        fact = hub.knowledge.facts("willow-park", "park")[0]
        assert fact.text in episode.introduction.text
        assert episode.introduction.grounded_fact_ids == (fact.fact_id,)
        assert not episode.introduction.ungrounded

    def test_no_facts_flags_ungrounded(self):
        hub = mock_hub(seed=7, gazetteer={"pois": {}, "types": {}})
        episode = compose_episode(
            selected("mystery-spot", "Mystery Spot", "crater"), ctx(),
            hub.knowledge, hub.text,
        )
        assert episode.introduction.ungrounded
        assert episode.introduction.grounded_fact_ids == ()

    def test_transition_on_environment_shift(self):
        hub = mock_hub(seed=7)
        episode = compose_episode(PLAN5[4], ctx(), hub.knowledge, hub.text,
                                  episode_index=4, prev_type_tag="bridge")
        assert episode.transition is not None
        assert episode.transition.kind is SegmentKind.TRANSITION
        assert "waterside" in episode.transition.text
        assert "campus" in episode.transition.text
        same_env = compose_episode(PLAN5[1], ctx(), hub.knowledge, hub.text,
                                   episode_index=1, prev_type_tag="gallery")
        assert same_env.transition is None

    def test_narration_references_prior_summary(self):
        hub = mock_hub(seed=7)
        prior = episode_summary_line(PLAN5[0])
        episode = compose_episode(PLAN5[1], ctx(prior=prior), hub.knowledge, hub.text,
                                  episode_index=1)
        assert "After the visit to Willow Park" in episode.narration.text

    def test_all_segments_clear_hard_lint(self):
        hub = mock_hub(seed=7)
        for theme in StoryTheme:
            for i, poi in enumerate(PLAN5):
                episode = compose_episode(poi, ctx(theme=theme), hub.knowledge, hub.text,
                                          episode_index=i,
                                          prev_type_tag=None if i == 0 else PLAN5[i - 1].candidate.type_tag)
                for segment in episode.in_order():
                    assert hard_violations(segment.text) == [], segment.text

    def test_truncated_order_skips_narration(self):
        hub = mock_hub(seed=7)
        episode = compose_episode(PLAN5[1], ctx(), hub.knowledge, hub.text, episode_index=1)
        kinds = [s.kind for s in episode.in_order(truncated=True)]
        assert kinds == [SegmentKind.APPROACH, SegmentKind.INTRODUCTION]


def log_fixture(goal_counts, locations):
    entries = []
    seq = 0
    for poi in locations:
        entries.append({"seq": seq, "ts": 0.0, "kind": "segment", "payload": {
            "segment": {"id": f"seg-{seq}", "kind": "approach", "poi_id": poi, "text": "Look!"}}})
        seq += 1
    i = 0
    for goal, count in goal_counts.items():
        for _ in range(count):
            pid = f"q{i}"
            entries.append({"seq": seq, "ts": 0.0, "kind": "prompt", "payload": {
                "prompt": {"id": pid, "goal": goal, "poi_id": locations[0] if locations else "p",
                           "strategy": "inference", "text": "Why?", "bloom": "analyze",
                           "choices": None, "hint_image_spec": "s", "used_fallback": False},
                "slot": i}})
            seq += 1
            entries.append({"seq": seq, "ts": 0.0, "kind": "answer_ack", "payload": {
                "prompt_id": pid, "transcript": "yes", "accepted_as": "answer"}})
            seq += 1
            i += 1
    return entries


class TestComposeReflection:
    def test_goal_split_three_four_two(self):
        entries = log_fixture(
            {"creativity": 3, "logical_ability": 4, "decision_making": 2},
            ["p1", "p2", "p3"],
        )
        segment, summary = compose_reflection(entries, [("p1", "mockimg/a.svg")], ctx(),
                                              mock_hub(seed=1).text)
        assert summary.prompts_answered[DevelopmentalGoal.CREATIVITY] == 3
        assert summary.prompts_answered[DevelopmentalGoal.LOGICAL_ABILITY] == 4
        assert summary.prompts_answered[DevelopmentalGoal.DECISION_MAKING] == 2
        assert "3 ideas" in segment.text and "4 puzzles" in segment.text and "2 choices" in segment.text

    def test_empty_log(self):
        segment, summary = compose_reflection([], [], ctx(), mock_hub(seed=1).text)
        assert summary.locations_interacted == 0
        assert sum(summary.prompts_answered.values()) == 0
        assert summary.gallery == ()
        assert segment.kind is SegmentKind.REFLECTION

    def test_gallery_one_image_per_location(self):
        locations = [f"p{i}" for i in range(5)]
        entries = log_fixture({"creativity": 1}, locations)
        gallery = [(p, f"mockimg/{p}.svg") for p in locations]
        _, summary = compose_reflection(entries, gallery, ctx(), mock_hub(seed=1).text)
        assert len(summary.gallery) == 5
        assert summary.locations_interacted == 5

    def test_gallery_restricted_to_interacted(self):
        entries = log_fixture({"creativity": 1}, ["p1"])
        _, summary = compose_reflection(entries, [("p1", "a.svg"), ("ghost", "b.svg")],
                                        ctx(), mock_hub(seed=1).text)
        assert summary.gallery == (("p1", "a.svg"),)


class TestSegmentInvariants:
    def test_introduction_needs_grounding_or_flag(self):
        with pytest.raises(ValueError):
            StorySegment(id="s", kind=SegmentKind.INTRODUCTION, text="Hello.")
        ok = StorySegment(id="s", kind=SegmentKind.INTRODUCTION, text="Hello.", ungrounded=True)
        assert ok.ungrounded

    def test_four_themes_four_characters(self):
        assert len(list(StoryTheme)) == 4
        assert len(list(Character)) == 4
        assert Character.RABBIT.display_name == "Hazel the Rabbit"

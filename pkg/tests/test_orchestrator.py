import pytest

from scenic.orchestrator import (
    AnswerReceived,
    ChildQuestion,
    EmitHintImage,
    EmitPrompt,
    EmitSegment,
    EventRejected,
    FinishSession,
    HintRequested,
    LogAnswer,
    OrchestratorConfig,
    Phase,
    PositionUpdated,
    SegmentFinished,
    SessionDeps,
    SessionStarted,
    SessionState,
    SilenceTimeout,
    StreamEnded,
    detect_help_request,
    event_from_payload,
    event_to_payload,
    handle_event,
    prompt_budget,
)
from scenic.providers import mock_hub
from scenic.story import Character, SegmentKind, StoryContext, StoryTheme
from scenic.strategies import plan_strategy_sequence

from conftest import golden_pois, golden_route


@pytest.fixture
def deps():
    route = golden_route()
    hub = mock_hub(seed=42)
    return SessionDeps(
        route_length=route.length,
        pois=golden_pois(route),
        plan=plan_strategy_sequence(60, 42),
        context=StoryContext(theme=StoryTheme.HISTORY, character=Character.RABBIT,
                             weather=hub.weather.weather(route.points[0])),
        hub=hub,
        eta_seconds=1040.0,
    )


def pos(offset, ts, cross=0.0):
    return PositionUpdated(offset=offset, cross_track=cross, ts=ts, event_id="e")


def drive_to_conversing(deps, poi=0):
    """Shortest event path into the first conversation."""
    state, _ = handle_event(SessionState(), SessionStarted(ts=0.0), deps)
    state, _ = handle_event(state, SegmentFinished("seg-orientation", ts=10.0), deps)
    index = -1
    ts = 10.0
    effects = []
    while True:
        index += 1
        trigger = deps.pois[index].trigger_offset
        ts += 1
        state, effects = handle_event(state, pos(trigger + 1, ts), deps)
        for phase in ("approach", "introduction", "narration"):
            ts += 5
            state, effects = handle_event(
                state, SegmentFinished(f"seg-{index}-{phase}", ts=ts), deps
            )
        if index == poi:
            return state, effects, ts


class TestLifecycle:
    def test_start_emits_orientation(self, deps):
        state, effects = handle_event(SessionState(), SessionStarted(ts=0.0), deps)
        assert state.phase is Phase.ORIENTING
        assert isinstance(effects[0], EmitSegment)
        assert effects[0].segment.kind is SegmentKind.ORIENTATION

    def test_first_position_also_starts(self, deps):
        state, effects = handle_event(SessionState(), pos(0.0, 0.0), deps)
        assert state.phase is Phase.ORIENTING
        assert state.last_offset == 0.0
        assert isinstance(effects[0], EmitSegment)

    def test_orientation_finish_starts_cruising(self, deps):
        state, _ = handle_event(SessionState(), SessionStarted(ts=0.0), deps)
        state, effects = handle_event(state, SegmentFinished("seg-orientation", ts=5.0), deps)
        assert state.phase is Phase.CRUISING
        assert state.poi_index == 0
        assert effects == []

    def test_completed_rejects_everything(self, deps):
        state = SessionState(phase=Phase.COMPLETED)
        with pytest.raises(EventRejected):
            handle_event(state, pos(100.0, 1.0), deps)
        with pytest.raises(EventRejected):
            handle_event(state, StreamEnded(ts=1.0), deps)


class TestTriggers:
    def test_trigger_crossing_enters_episode(self, deps):
        state, _ = handle_event(SessionState(), SessionStarted(ts=0.0), deps)
        state, _ = handle_event(state, SegmentFinished("seg-orientation", ts=5.0), deps)
        state, effects = handle_event(state, pos(1405.0, 117.0), deps)
        assert state.phase is Phase.IN_EPISODE
        assert state.poi_index == 0
        segments = [e.segment for e in effects if isinstance(e, EmitSegment)]
        assert segments[-1].kind is SegmentKind.APPROACH
        assert segments[-1].poi_id == "willow-park"

    def test_below_trigger_just_tracks(self, deps):
        state, _ = handle_event(SessionState(), SessionStarted(ts=0.0), deps)
        state, _ = handle_event(state, SegmentFinished("seg-orientation", ts=5.0), deps)
        state, effects = handle_event(state, pos(1000.0, 80.0), deps)
        assert state.phase is Phase.CRUISING
        assert effects == []
        assert state.last_offset == 1000.0

    def test_out_of_order_position_dropped(self, deps):
        state, _ = handle_event(SessionState(), SessionStarted(ts=0.0), deps)
        state, _ = handle_event(state, pos(1000.0, 80.0), deps)
        dropped, effects = handle_event(state, pos(900.0, 81.0), deps)
        assert dropped == state  # 100 m backstep exceeds the 50 m allowance
        assert effects == []

    def test_small_backstep_tolerated(self, deps):
        state, _ = handle_event(SessionState(), SessionStarted(ts=0.0), deps)
        state, _ = handle_event(state, pos(1000.0, 80.0), deps)
        tracked, _ = handle_event(state, pos(980.0, 81.0), deps)
        assert tracked.last_offset == 980.0


class TestEpisodeFlow:
    def test_segment_order_and_grounding(self, deps):
        state, _ = handle_event(SessionState(), SessionStarted(ts=0.0), deps)
        state, _ = handle_event(state, SegmentFinished("seg-orientation", ts=5.0), deps)
        state, effects = handle_event(state, pos(1405.0, 117.0), deps)
        state, effects = handle_event(state, SegmentFinished("seg-0-approach", ts=125.0), deps)
        intro = effects[0].segment
        assert intro.kind is SegmentKind.INTRODUCTION
        assert intro.grounded_fact_ids
        state, effects = handle_event(state, SegmentFinished("seg-0-introduction", ts=135.0), deps)
        assert effects[0].segment.kind is SegmentKind.NARRATION
        state, effects = handle_event(state, SegmentFinished("seg-0-narration", ts=150.0), deps)
        assert state.phase is Phase.CONVERSING
        assert isinstance(effects[0], EmitPrompt)

    def test_stale_segment_finish_is_noop(self, deps):
        state, _ = handle_event(SessionState(), SessionStarted(ts=0.0), deps)
        state, _ = handle_event(state, pos(1405.0, 117.0), deps)
        state, _ = handle_event(state, SegmentFinished("seg-orientation", ts=118.0), deps)
        unchanged, effects = handle_event(state, SegmentFinished("seg-9-narration", ts=119.0), deps)
        assert unchanged == state
        assert effects == []

    def test_prompt_budget_from_speed(self, deps):
        state, effects, ts = drive_to_conversing(deps, poi=0)
        assert state.phase is Phase.CONVERSING
        assert 1 <= state.prompts_remaining <= 3


class TestConversation:
    def test_answer_tallies_and_advances(self, deps):
        state, effects, ts = drive_to_conversing(deps)
        prompt = effects[0].prompt
        budget = state.prompts_remaining
        state, effects = handle_event(
            state, AnswerReceived(prompt.id, "A tall tree!", ts=ts + 5), deps
        )
        assert isinstance(effects[0], LogAnswer)
        assert effects[0].accepted_as == "answer"
        if budget > 1:
            assert isinstance(effects[1], EmitPrompt)
            assert state.prompts_remaining == budget - 1
        else:
            assert state.phase is Phase.CRUISING

    def test_help_answer_hints_and_stays(self, deps):
        state, effects, ts = drive_to_conversing(deps)
        prompt = effects[0].prompt
        new_state, effects = handle_event(
            state, AnswerReceived(prompt.id, "I have no idea.", ts=ts + 5), deps
        )
        kinds = [type(e) for e in effects]
        assert kinds == [LogAnswer, EmitHintImage]
        assert effects[0].accepted_as == "help"
        assert new_state.phase is Phase.CONVERSING
        assert new_state.active_prompt_id == prompt.id
        assert new_state.awaiting_answer

    def test_wrong_prompt_id_rejected(self, deps):
        state, effects, ts = drive_to_conversing(deps)
        with pytest.raises(EventRejected):
            handle_event(state, AnswerReceived("prompt-999", "hello", ts=ts + 5), deps)

    def test_silence_hints_then_abandons(self, deps):
        state, effects, ts = drive_to_conversing(deps)
        prompt = effects[0].prompt
        budget = state.prompts_remaining
        state, effects = handle_event(state, SilenceTimeout(prompt.id, ts=ts + 10), deps)
        assert isinstance(effects[0], EmitHintImage)
        assert state.hint_count == 1
        state, effects = handle_event(state, SilenceTimeout(prompt.id, ts=ts + 20), deps)
        if budget > 1:
            assert isinstance(effects[0], EmitPrompt)
            assert effects[0].prompt.id != prompt.id
        else:
            assert state.phase is Phase.CRUISING

    def test_stale_timeout_dropped(self, deps):
        state, effects, ts = drive_to_conversing(deps)
        unchanged, effects = handle_event(state, SilenceTimeout("prompt-old", ts=ts + 10), deps)
        assert unchanged == state
        assert effects == []

    def test_hint_requested(self, deps):
        state, effects, ts = drive_to_conversing(deps)
        state, effects = handle_event(state, HintRequested(ts=ts + 3), deps)
        assert isinstance(effects[0], EmitHintImage)

    def test_child_question_in_conversation(self, deps):
        state, effects, ts = drive_to_conversing(deps)
        same, effects = handle_event(
            state, ChildQuestion("Why is this road called that?", ts=ts + 2), deps
        )
        assert same == state
        assert effects[0].question == "Why is this road called that?"
        assert effects[0].text

    def test_child_question_while_cruising(self, deps):
        state, _ = handle_event(SessionState(), SessionStarted(ts=0.0), deps)
        state, _ = handle_event(state, SegmentFinished("seg-orientation", ts=5.0), deps)
        _, effects = handle_event(state, ChildQuestion("What kind of bird is that?", ts=6.0), deps)
        assert effects and effects[0].text

    def test_child_question_rejected_in_episode(self, deps):
        state, _ = handle_event(SessionState(), SessionStarted(ts=0.0), deps)
        state, _ = handle_event(state, pos(1405.0, 117.0), deps)
        with pytest.raises(EventRejected):
            handle_event(state, ChildQuestion("Hello?", ts=118.0), deps)


class TestTruncation:
    def test_next_trigger_during_conversation_truncates(self, deps):
        state, effects, ts = drive_to_conversing(deps, poi=0)
        next_trigger = deps.pois[1].trigger_offset
        state, effects = handle_event(state, pos(next_trigger + 1, ts + 30), deps)
        assert state.phase is Phase.IN_EPISODE
        assert state.poi_index == 1
        assert state.truncated
        state, effects = handle_event(
            state, SegmentFinished("seg-1-approach", ts=ts + 40), deps
        )
        assert effects[0].segment.kind is SegmentKind.INTRODUCTION
        state, effects = handle_event(
            state, SegmentFinished("seg-1-introduction", ts=ts + 50), deps
        )
        # truncated episodes skip narration and go straight to prompts
        assert state.phase is Phase.CONVERSING
        assert isinstance(effects[0], EmitPrompt)


class TestReflection:
    def test_arrival_triggers_reflection_then_completion(self, deps):
        state, _ = handle_event(SessionState(), SessionStarted(ts=0.0), deps)
        state, _ = handle_event(state, SegmentFinished("seg-orientation", ts=5.0), deps)
        state = SessionState(
            phase=Phase.CRUISING, poi_index=len(deps.pois),
            last_offset=11_000.0, last_ts=900.0, recent_speed=12.0,
        )
        state, effects = handle_event(state, pos(11_900.0, 990.0), deps)
        assert state.phase is Phase.REFLECTING
        assert effects[0].segment.kind is SegmentKind.REFLECTION
        state, effects = handle_event(state, SegmentFinished("seg-reflection", ts=995.0), deps)
        assert state.phase is Phase.COMPLETED
        assert isinstance(effects[0], FinishSession)

    def test_stream_end_forces_reflection(self, deps):
        state, _ = handle_event(SessionState(), SessionStarted(ts=0.0), deps)
        state, effects = handle_event(state, StreamEnded(ts=10.0), deps)
        assert state.phase is Phase.REFLECTING
        assert effects[0].segment.kind is SegmentKind.REFLECTION


class TestPromptBudget:
    def test_clamps_to_three(self):
        assert prompt_budget(2000.0, 10.0, OrchestratorConfig()) == 3

    def test_minimum_one(self):
        assert prompt_budget(500.0, 15.0, OrchestratorConfig()) == 1

    def test_fallback_speed_when_stopped(self):
        assert prompt_budget(2700.0, None, OrchestratorConfig()) == 3
        assert prompt_budget(2700.0, 0.0, OrchestratorConfig()) == 3

    def test_final_leg_cap_lifted(self):
        assert prompt_budget(4000.0, 10.0, OrchestratorConfig(), final_leg=True) == 5

    def test_negative_distance_rejected(self):
        with pytest.raises(ValueError):
            prompt_budget(-1.0, 10.0, OrchestratorConfig())


class TestHelpDetection:
    @pytest.mark.parametrize("text,expected", [
        ("I have no idea.", True),
        ("i don't know", True),
        ("HELP", True),
        ("I'm not sure...", True),
        ("A dragon!", False),
        ("", False),
        ("The recycling bin", False),
    ])
    def test_phrases(self, text, expected):
        assert detect_help_request(text) is expected


class TestEventSerialization:
    def test_roundtrip_all_types(self):
        events = [
            SessionStarted(ts=0.0, event_id="e0"),
            PositionUpdated(offset=12.5, cross_track=0.5, ts=1.0, event_id="e1"),
            SegmentFinished(segment_id="seg-1-approach", ts=2.0, event_id="e2"),
            AnswerReceived(prompt_id="p1", transcript="yes", ts=3.0, event_id="e3"),
            ChildQuestion(transcript="why?", ts=4.0, event_id="e4"),
            HintRequested(ts=5.0, event_id="e5"),
            SilenceTimeout(prompt_id="p1", ts=6.0, event_id="e6"),
            StreamEnded(ts=7.0, event_id="e7"),
        ]
        for event in events:
            assert event_from_payload(event_to_payload(event)) == event

"""Assembling and running whole journeys: providers, story context, strategy
plan, journey log and (optionally) simulated playback for a session."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .geo import Route
from .orchestrator import OrchestratorConfig, SessionDeps
from .pois import SelectedPoi
from .providers import mock_hub
from .session import AutoPilot, SessionRuntime
from .simulator import AnswerScript, SpeedProfile, VirtualClock, generate_trace, playback
from .store import JourneyStore
from .story import Character, StoryContext, StoryTheme
from .strategies import plan_strategy_sequence

STRATEGY_PLAN_SLOTS = 60  # cycled if a journey somehow asks for more
VIRTUAL_CREATED_AT = "2000-01-01T00:00:00Z"


@dataclass
class JourneySetup:
    runtime: SessionRuntime
    deps: SessionDeps
    route: Route
    profile: SpeedProfile


def create_runtime(
    session_id: str,
    route: Route,
    pois: list[SelectedPoi],
    theme: StoryTheme,
    character: Character,
    seed: int,
    store: JourneyStore | None = None,
    profile: SpeedProfile | None = None,
    script: AnswerScript | None = None,
    config: OrchestratorConfig | None = None,
    route_ref: str = "",
    created_at: str = VIRTUAL_CREATED_AT,
    simulated: bool = True,
) -> JourneySetup:
    """Wire providers, story context and the journey log into one session."""
    profile = profile or SpeedProfile()
    hub = mock_hub(seed)
    context = StoryContext(
        theme=theme,
        character=character,
        weather=hub.weather.weather(route.points[0]),
    )
    deps = SessionDeps(
        route_length=route.length,
        pois=list(pois),
        plan=plan_strategy_sequence(STRATEGY_PLAN_SLOTS, seed),
        context=context,
        hub=hub,
        eta_seconds=hub.eta.eta_seconds(route, profile.cruise_speed, profile.total_stop_seconds),
        config=config or OrchestratorConfig(),
    )
    writer = None
    if store is not None:
        writer = store.create(
            session_id,
            {
                "route_ref": route_ref,
                "theme": theme.value,
                "character": character.value,
                "seed": seed,
                "created_at": created_at,
                "mode": "simulated" if simulated else "external-positions",
                "pois": [
                    {
                        "id": p.candidate.id,
                        "name": p.candidate.name,
                        "type": p.candidate.type_tag,
                        "lat": p.candidate.point.lat,
                        "lon": p.candidate.point.lon,
                        "offset": p.offset,
                        "trigger_offset": p.trigger_offset,
                    }
                    for p in pois
                ],
            },
        )
    autopilot = AutoPilot(script=script) if simulated else None
    runtime = SessionRuntime(session_id, deps, writer=writer, autopilot=autopilot)
    return JourneySetup(runtime=runtime, deps=deps, route=route, profile=profile)


def run_simulated_journey(
    setup: JourneySetup,
    sample_hz: float = 1.0,
    clock=None,
) -> SessionRuntime:
    """Generate the trace and play the whole journey; closes the log."""
    trace = generate_trace(setup.route, setup.profile, sample_hz=sample_hz)
    playback(trace, setup.runtime, clock=clock or VirtualClock(), route=setup.route)
    setup.runtime.close()
    return setup.runtime

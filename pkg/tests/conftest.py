import random
from pathlib import Path

import pytest

from scenic.geo import GeoPoint, Route, destination, point_at_offset, route_from_geojson
from scenic.journeys import JourneySetup, create_runtime
from scenic.pois import load_poi_geojson, plan_pois
from scenic.simulator import AnswerScript, SpeedProfile
from scenic.story import Character, StoryTheme

GOLDEN_DIR = Path(__file__).parent / "fixtures" / "golden"
GOLDEN_PROFILE = SpeedProfile(cruise_speed=12.0, stops=((5000.0, 40.0),))


def golden_route() -> Route:
    return route_from_geojson(GOLDEN_DIR / "route.geojson")


def golden_pois(route=None):
    return plan_pois(route or golden_route(), load_poi_geojson(GOLDEN_DIR / "pois.geojson"))


def golden_script() -> AnswerScript:
    return AnswerScript.load(GOLDEN_DIR / "answers.jsonl")


def golden_setup(session_id="golden", store=None, seed=42, theme=StoryTheme.HISTORY,
                 character=Character.RABBIT, script=None) -> JourneySetup:
    route = golden_route()
    return create_runtime(
        session_id,
        route,
        golden_pois(route),
        theme,
        character,
        seed,
        store=store,
        profile=GOLDEN_PROFILE,
        script=script if script is not None else golden_script(),
        route_ref="golden/route.geojson",
    )


def make_straight_route(length_m: float, n_points: int = 20, start: GeoPoint | None = None,
                        bearing: float = 90.0) -> Route:
    origin = start or GeoPoint(31.20, 121.40)
    step = length_m / (n_points - 1)
    pts = [origin]
    for _ in range(n_points - 1):
        pts.append(destination(pts[-1], bearing, step))
    return Route.from_points(pts)


def make_wiggly_route(rng: random.Random, length_m: float, n_legs: int = 12) -> Route:
    """A gently turning polyline of roughly the requested length."""
    pts = [GeoPoint(rng.uniform(25.0, 45.0), rng.uniform(100.0, 130.0))]
    bearing = rng.uniform(0, 360)
    leg = length_m / n_legs
    for _ in range(n_legs):
        bearing += rng.uniform(-25, 25)
        pts.append(destination(pts[-1], bearing, leg))
    return Route.from_points(pts)


def point_near_route(route: Route, offset: float, lateral_m: float = 0.0,
                     side_bearing: float = 0.0) -> GeoPoint:
    base = point_at_offset(route, offset)
    if lateral_m == 0.0:
        return base
    return destination(base, side_bearing, lateral_m)


@pytest.fixture
def rng():
    return random.Random(20240801)

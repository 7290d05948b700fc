"""Point-of-interest selection along a route.

Candidates are filtered to a corridor around the route, away from the
endpoints and off a child-unsuitable type blocklist, then picked by a greedy
forward sweep that enforces minimum spacing, pairwise-distinct types, and a
route-length-dependent cap.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .geo import GeoInputError, GeoPoint, Route, RoutePosition, project_to_route

CO_LOCATED_TOLERANCE_M = 1.0


class SelectionConfigError(ValueError):
    """A selection parameter combination is unusable."""


def default_type_blocklist() -> frozenset[str]:
    data = json.loads(
        resources.files("scenic.assets").joinpath("blocklist.json").read_text(encoding="utf-8")
    )
    return frozenset(data["type_tags"])


@dataclass(frozen=True)
class PoiCandidate:
    """One place from the POI database."""

    id: str
    name: str
    point: GeoPoint
    type_tag: str
    description: str = ""

    def __post_init__(self) -> None:
        if not self.type_tag:
            raise ValueError(f"candidate {self.id!r} has an empty type_tag")


@dataclass(frozen=True)
class SelectionConfig:
    endpoint_exclusion: float = 1000.0
    min_spacing: float = 800.0
    corridor_width: float = 150.0
    approach_trigger: float = 100.0
    type_blocklist: frozenset[str] = field(default_factory=default_type_blocklist)
    # (max route km, max POIs); beyond the last band the cap grows by one per 5 km
    band_table: tuple[tuple[float, int], ...] = ((10.0, 4), (15.0, 5), (20.0, 6))

    def __post_init__(self) -> None:
        for name in ("endpoint_exclusion", "min_spacing", "corridor_width", "approach_trigger"):
            if getattr(self, name) <= 0:
                raise SelectionConfigError(f"{name} must be > 0")
        if not self.band_table:
            raise SelectionConfigError("band_table must not be empty")
        kms = [km for km, _ in self.band_table]
        if kms != sorted(kms):
            raise SelectionConfigError("band_table must be sorted by route length")
        if self.min_spacing <= self.approach_trigger:
            raise SelectionConfigError("min_spacing must exceed approach_trigger")


@dataclass(frozen=True)
class SelectedPoi:
    """A chosen interaction anchor; trigger_offset is offset - approach_trigger."""

    candidate: PoiCandidate
    offset: float
    trigger_offset: float | None = None


def max_poi_count(route_length_m: float, config: SelectionConfig) -> int:
    """Cap on selected POIs for a route of the given length."""
    if route_length_m <= 0:
        raise ValueError("route length must be > 0")
    km = route_length_m / 1000.0
    for band_km, cap in config.band_table:
        if km <= band_km:
            return cap
    last_km, last_cap = config.band_table[-1]
    return last_cap + math.ceil((km - last_km) / 5.0)


def filter_candidates(
    route: Route,
    candidates: list[PoiCandidate],
    config: SelectionConfig,
) -> list[tuple[PoiCandidate, RoutePosition]]:
    """Keep corridor-visible, non-blocklisted candidates clear of both endpoints.

    Output is sorted by along-route offset (candidate id as tiebreaker).
    """
    lo = config.endpoint_exclusion
    hi = route.length - config.endpoint_exclusion
    kept = []
    for cand in candidates:
        if cand.type_tag in config.type_blocklist:
            continue
        pos = project_to_route(route, cand.point)
        if pos.cross_track > config.corridor_width:
            continue
        if not lo <= pos.offset <= hi:
            continue
        kept.append((cand, pos))
    kept.sort(key=lambda item: (item[1].offset, item[0].id))
    return kept


def select_pois(
    eligible: list[tuple[PoiCandidate, RoutePosition]],
    route_length_m: float,
    config: SelectionConfig,
) -> list[SelectedPoi]:
    """Greedy forward sweep over offset-sorted eligible candidates.

    Skips anything violating spacing or type uniqueness; stops at the route
    band cap. Candidates within 1 m of each other count as co-located and the
    lexicographically smallest id among them is tried first.
    """
    cap = max_poi_count(route_length_m, config)
    selected: list[SelectedPoi] = []
    used_types: set[str] = set()

    clusters: list[list[tuple[PoiCandidate, RoutePosition]]] = []
    for item in eligible:
        if clusters and item[1].offset - clusters[-1][0][1].offset <= CO_LOCATED_TOLERANCE_M:
            clusters[-1].append(item)
        else:
            clusters.append([item])

    for cluster in clusters:
        if len(selected) >= cap:
            break
        for cand, pos in sorted(cluster, key=lambda item: item[0].id):
            if cand.type_tag in used_types:
                continue
            if selected and pos.offset - selected[-1].offset < config.min_spacing:
                continue
            selected.append(SelectedPoi(candidate=cand, offset=pos.offset))
            used_types.add(cand.type_tag)
            break  # spacing rules out the rest of a co-located cluster
    return selected


def compute_triggers(selected: list[SelectedPoi], config: SelectionConfig) -> list[SelectedPoi]:
    """Fill trigger offsets (offset minus the approach distance)."""
    if config.approach_trigger >= config.endpoint_exclusion:
        raise SelectionConfigError(
            "approach_trigger must be smaller than endpoint_exclusion "
            f"({config.approach_trigger} >= {config.endpoint_exclusion})"
        )
    return [replace(poi, trigger_offset=poi.offset - config.approach_trigger) for poi in selected]


def plan_pois(
    route: Route,
    candidates: list[PoiCandidate],
    config: SelectionConfig | None = None,
) -> list[SelectedPoi]:
    """Full selection pipeline: filter, greedy select, compute triggers."""
    cfg = config if config is not None else SelectionConfig()
    eligible = filter_candidates(route, candidates, cfg)
    return compute_triggers(select_pois(eligible, route.length, cfg), cfg)


def load_poi_geojson(path) -> list[PoiCandidate]:
    """Load candidates from a GeoJSON FeatureCollection of Points."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise GeoInputError(f"cannot read POI GeoJSON {path}: {exc}") from exc
    if data.get("type") != "FeatureCollection":
        raise GeoInputError(f"{path}: expected a FeatureCollection of Points")
    candidates = []
    seen: set[str] = set()
    for feature in data.get("features", []):
        geometry = feature.get("geometry") or {}
        if geometry.get("type") != "Point":
            continue
        props = feature.get("properties") or {}
        try:
            lon, lat = geometry["coordinates"][:2]
            cand = PoiCandidate(
                id=str(props["id"]),
                name=str(props.get("name", props["id"])),
                point=GeoPoint(lat=float(lat), lon=float(lon)),
                type_tag=str(props["type"]),
                description=str(props.get("description", "")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise GeoInputError(f"bad POI feature in {path}: {exc}") from exc
        if cand.id in seen:
            raise GeoInputError(f"duplicate POI id {cand.id!r} in {path}")
        seen.add(cand.id)
        candidates.append(cand)
    return candidates


def load_poi_csv(path) -> list[PoiCandidate]:
    """Load candidates from CSV with header id,name,lat,lon,type,description."""
    candidates = []
    seen: set[str] = set()
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                cand = PoiCandidate(
                    id=row["id"],
                    name=row["name"],
                    point=GeoPoint(lat=float(row["lat"]), lon=float(row["lon"])),
                    type_tag=row["type"],
                    description=row.get("description", "") or "",
                )
                if cand.id in seen:
                    raise GeoInputError(f"duplicate POI id {cand.id!r} in {path}")
                seen.add(cand.id)
                candidates.append(cand)
    except OSError as exc:
        raise GeoInputError(f"cannot read POI CSV {path}: {exc}") from exc
    except (KeyError, TypeError, ValueError) as exc:
        raise GeoInputError(f"bad POI row in {path}: {exc}") from exc
    return candidates


def selection_to_geojson(selected: list[SelectedPoi]) -> dict:
    """Render a selection as a GeoJSON FeatureCollection with trigger offsets."""
    return {
        "type": "FeatureCollection",
        "features": [
            {
                "type": "Feature",
                "geometry": {
                    "type": "Point",
                    "coordinates": [poi.candidate.point.lon, poi.candidate.point.lat],
                },
                "properties": {
                    "id": poi.candidate.id,
                    "name": poi.candidate.name,
                    "type": poi.candidate.type_tag,
                    "offset_m": round(poi.offset, 3),
                    "trigger_offset_m": None
                    if poi.trigger_offset is None
                    else round(poi.trigger_offset, 3),
                },
            }
            for poi in selected
        ],
    }

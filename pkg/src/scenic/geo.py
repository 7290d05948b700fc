"""Geodesic and polyline primitives: distances, route projection, cumulative offsets.

All distances are meters on a spherical Earth (R = 6,371,000 m). At the scales
this engine cares about (hundred-meter triggers, sub-kilometer spacing) the
spherical model is well inside tolerance.
"""
from __future__ import annotations

import json
import math
import xml.etree.ElementTree as ElementTree
from bisect import bisect_right
from dataclasses import dataclass
from pathlib import Path

EARTH_RADIUS_M = 6_371_000.0


class GeoInputError(ValueError):
    """A route or POI file could not be parsed."""


@dataclass(frozen=True)
class GeoPoint:
    """A WGS84 coordinate in decimal degrees."""

    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude out of range [-90, 90]: {self.lat}")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude out of range [-180, 180]: {self.lon}")


@dataclass(frozen=True)
class RoutePosition:
    """A location expressed relative to a route.

    offset: meters along the route from its start, in [0, route length].
    cross_track: perpendicular distance from the route, >= 0.
    """

    offset: float
    cross_track: float


@dataclass(frozen=True)
class Route:
    """An ordered polyline with per-vertex cumulative offsets in meters."""

    points: tuple[GeoPoint, ...]
    cum_offsets: tuple[float, ...]

    @classmethod
    def from_points(cls, points) -> "Route":
        pts = tuple(points)
        if len(pts) < 2:
            raise ValueError("a route needs at least 2 points")
        offsets = [0.0]
        for a, b in zip(pts, pts[1:]):
            offsets.append(offsets[-1] + geodesic_distance(a, b))
        return cls(points=pts, cum_offsets=tuple(offsets))

    @property
    def length(self) -> float:
        return self.cum_offsets[-1]


def geodesic_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters between two points (haversine)."""
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    dphi = math.radians(b.lat - a.lat)
    dlam = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def route_length(route: Route) -> float:
    """Total route length in meters."""
    return route.cum_offsets[-1]


def _local_xy(origin: GeoPoint, p: GeoPoint) -> tuple[float, float]:
    """Equirectangular projection of p into a plane tangent at origin.

    Accurate to well under a meter for the sub-5 km segments urban routes use.
    """
    dlon = (p.lon - origin.lon + 180.0) % 360.0 - 180.0
    x = math.radians(dlon) * math.cos(math.radians(origin.lat)) * EARTH_RADIUS_M
    y = math.radians(p.lat - origin.lat) * EARTH_RADIUS_M
    return x, y


def project_to_route(route: Route, p: GeoPoint) -> RoutePosition:
    """Project p onto the route, minimizing cross-track distance.

    Ties between equally distant segments are broken toward the smaller offset.
    """
    best_cross = math.inf
    best_offset = 0.0
    for i in range(len(route.points) - 1):
        a = route.points[i]
        b = route.points[i + 1]
        seg_len = route.cum_offsets[i + 1] - route.cum_offsets[i]
        px, py = _local_xy(a, p)
        if seg_len <= 0.0:
            cross = math.hypot(px, py)
            offset = route.cum_offsets[i]
        else:
            bx, by = _local_xy(a, b)
            denom = bx * bx + by * by
            t = 0.0 if denom == 0.0 else max(0.0, min(1.0, (px * bx + py * by) / denom))
            cross = math.hypot(px - t * bx, py - t * by)
            offset = route.cum_offsets[i] + t * seg_len
        if cross < best_cross - 1e-9 or (abs(cross - best_cross) <= 1e-9 and offset < best_offset):
            best_cross = cross
            best_offset = offset
    return RoutePosition(offset=best_offset, cross_track=best_cross)


def point_at_offset(route: Route, offset: float) -> GeoPoint:
    """The point on the route at the given along-route offset (clamped)."""
    offset = max(0.0, min(route.length, offset))
    i = bisect_right(route.cum_offsets, offset) - 1
    i = min(i, len(route.points) - 2)
    seg_len = route.cum_offsets[i + 1] - route.cum_offsets[i]
    if seg_len <= 0.0:
        return route.points[i]
    t = (offset - route.cum_offsets[i]) / seg_len
    a = route.points[i]
    b = route.points[i + 1]
    dlon = (b.lon - a.lon + 180.0) % 360.0 - 180.0
    lon = a.lon + t * dlon
    if lon > 180.0:
        lon -= 360.0
    elif lon < -180.0:
        lon += 360.0
    return GeoPoint(lat=a.lat + t * (b.lat - a.lat), lon=lon)


def destination(p: GeoPoint, bearing_deg: float, distance_m: float) -> GeoPoint:
    """The point reached from p by going distance_m along the given bearing."""
    delta = distance_m / EARTH_RADIUS_M
    theta = math.radians(bearing_deg)
    phi1 = math.radians(p.lat)
    lam1 = math.radians(p.lon)
    phi2 = math.asin(
        math.sin(phi1) * math.cos(delta) + math.cos(phi1) * math.sin(delta) * math.cos(theta)
    )
    lam2 = lam1 + math.atan2(
        math.sin(theta) * math.sin(delta) * math.cos(phi1),
        math.cos(delta) - math.sin(phi1) * math.sin(phi2),
    )
    lon = math.degrees(lam2)
    lon = (lon + 180.0) % 360.0 - 180.0
    return GeoPoint(lat=math.degrees(phi2), lon=lon)


def route_from_geojson(path) -> Route:
    """Load a route from a GeoJSON LineString (coordinates in lon,lat order).

    Accepts a bare geometry, a Feature, or a FeatureCollection whose first
    LineString feature is used.
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise GeoInputError(f"cannot read GeoJSON route {path}: {exc}") from exc
    geometry = _find_linestring(data)
    if geometry is None:
        raise GeoInputError(f"no LineString geometry found in {path}")
    coords = geometry.get("coordinates", [])
    if len(coords) < 2:
        raise GeoInputError(f"LineString in {path} has fewer than 2 coordinates")
    try:
        points = [GeoPoint(lat=float(c[1]), lon=float(c[0])) for c in coords]
    except (TypeError, IndexError, ValueError) as exc:
        raise GeoInputError(f"bad coordinate in {path}: {exc}") from exc
    return Route.from_points(points)


def _find_linestring(data) -> dict | None:
    if not isinstance(data, dict):
        return None
    kind = data.get("type")
    if kind == "LineString":
        return data
    if kind == "Feature":
        return _find_linestring(data.get("geometry"))
    if kind == "FeatureCollection":
        for feature in data.get("features", []):
            found = _find_linestring(feature)
            if found is not None:
                return found
    return None


def route_from_gpx(path) -> Route:
    """Load a route from a GPX file's track points (lat/lon attributes)."""
    try:
        tree = ElementTree.parse(path)
    except (OSError, ElementTree.ParseError) as exc:
        raise GeoInputError(f"cannot read GPX route {path}: {exc}") from exc
    points = []
    for elem in tree.iter():
        tag = elem.tag.rsplit("}", 1)[-1]
        if tag in ("trkpt", "rtept"):
            try:
                points.append(GeoPoint(lat=float(elem.get("lat")), lon=float(elem.get("lon"))))
            except (TypeError, ValueError) as exc:
                raise GeoInputError(f"bad trackpoint in {path}: {exc}") from exc
    if len(points) < 2:
        raise GeoInputError(f"GPX track in {path} has fewer than 2 points")
    return Route.from_points(points)

"""Deterministic GPS playback: trace generation along a route, a virtual or
realtime clock, and scripted child answers.

With the virtual clock a full journey runs in well under a second of wall
time; the realtime clock paces the same event timeline for live demos.
"""
from __future__ import annotations

import json
import math
import random
import time
import xml.etree.ElementTree as ElementTree
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import TYPE_CHECKING

from .geo import GeoPoint, Route, destination, point_at_offset, project_to_route
from .orchestrator import Phase, PositionUpdated

if TYPE_CHECKING:  # pragma: no cover
    from .session import SessionRuntime


class SimulatorError(ValueError):
    pass


@dataclass(frozen=True)
class SpeedProfile:
    cruise_speed: float = 10.0
    stops: tuple[tuple[float, float], ...] = ()  # (offset m, duration s)
    jitter_seed: int | None = None  # <= 5 m of lateral GPS noise

    def __post_init__(self) -> None:
        if self.cruise_speed <= 0:
            raise SimulatorError("cruise_speed must be > 0")
        for offset, duration in self.stops:
            if duration < 0:
                raise SimulatorError("stop durations must be >= 0")
            if offset < 0:
                raise SimulatorError("stop offsets must be >= 0")

    @property
    def total_stop_seconds(self) -> float:
        return sum(d for _, d in self.stops)


@dataclass(frozen=True)
class TracePoint:
    t: float
    point: GeoPoint
    offset: float


def _offset_at(t: float, cruise: float, stops: list[tuple[float, float]]) -> float:
    """Along-route offset after t seconds of the piecewise drive."""
    paid = 0.0
    for stop_offset, duration in stops:
        arrive = stop_offset / cruise + paid
        if t <= arrive:
            break
        paid += min(duration, t - arrive)
    return cruise * (t - paid)


def generate_trace(route: Route, profile: SpeedProfile, sample_hz: float = 1.0) -> list[TracePoint]:
    """Sample the drive at sample_hz; the final point lands exactly at the end."""
    if sample_hz <= 0:
        raise SimulatorError("sample_hz must be > 0")
    for stop_offset, _ in profile.stops:
        if stop_offset > route.length:
            raise SimulatorError(
                f"stop at {stop_offset} m is beyond the {route.length:.0f} m route"
            )
    stops = sorted(profile.stops)
    total_time = route.length / profile.cruise_speed + profile.total_stop_seconds
    rng = random.Random(profile.jitter_seed) if profile.jitter_seed is not None else None

    points: list[TracePoint] = []
    step = 1.0 / sample_hz
    n_steps = int(math.floor(total_time / step + 1e-9))
    times = [k * step for k in range(n_steps + 1)]
    if times[-1] < total_time - 1e-9:
        times.append(total_time)
    for t in times:
        offset = min(route.length, _offset_at(t, profile.cruise_speed, stops))
        point = point_at_offset(route, offset)
        if rng is not None:
            point = destination(point, rng.uniform(0.0, 360.0), rng.uniform(0.0, 5.0))
        points.append(TracePoint(t=t, point=point, offset=offset))
    return points


class VirtualClock:
    """Simulated time: sleeping jumps the clock forward instantly."""

    def __init__(self) -> None:
        self.now = 0.0

    def sleep_until(self, t: float) -> None:
        self.now = max(self.now, t)


class RealClock:
    def __init__(self) -> None:
        self._start = time.monotonic()

    @property
    def now(self) -> float:
        return time.monotonic() - self._start

    def sleep_until(self, t: float) -> None:
        delay = t - self.now
        if delay > 0:
            time.sleep(delay)


@dataclass(frozen=True)
class ScriptRecord:
    slot: int
    action: str  # answer | help | silence | question
    text: str = ""

    def __post_init__(self) -> None:
        if self.action not in ("answer", "help", "silence", "question"):
            raise SimulatorError(f"unknown script action {self.action!r}")
        if self.slot < 0:
            raise SimulatorError("slot must be >= 0")
        if self.action in ("answer", "question") and not self.text:
            raise SimulatorError(f"{self.action} records need text (slot {self.slot})")


@dataclass
class AnswerScript:
    """Scripted conversation: prompt slot index -> child actions, in order."""

    records: list[ScriptRecord] = field(default_factory=list)

    @classmethod
    def parse(cls, text: str) -> "AnswerScript":
        records = []
        for line_no, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                data = json.loads(line)
                records.append(
                    ScriptRecord(
                        slot=int(data["slot"]),
                        action=str(data["action"]),
                        text=str(data.get("text", "")),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise SimulatorError(f"bad script line {line_no}: {exc}") from exc
        return cls(records=records)

    @classmethod
    def load(cls, path) -> "AnswerScript":
        try:
            return cls.parse(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise SimulatorError(f"cannot read answer script {path}: {exc}") from exc

    def records_for(self, slot: int) -> list[ScriptRecord]:
        return [r for r in self.records if r.slot == slot]


def playback(
    trace: list[TracePoint],
    runtime: "SessionRuntime",
    clock: VirtualClock | RealClock | None = None,
    route: Route | None = None,
) -> None:
    """Feed a trace into a session under the given clock, then finish it.

    Positions are projected onto the session's route (jittered traces land a
    few meters off the polyline). The session must not have run before.
    """
    if runtime.state.phase not in (Phase.CREATED, Phase.ORIENTING):
        raise SimulatorError(f"session is already {runtime.state.phase.value}")
    clock = clock or VirtualClock()
    runtime.begin(ts=0.0)
    last_ts = 0.0
    for tp in trace:
        if runtime.state.phase is Phase.COMPLETED:
            break
        clock.sleep_until(tp.t)
        runtime.advance_to(tp.t)
        if runtime.state.phase is Phase.COMPLETED:
            break
        if route is not None:
            pos = project_to_route(route, tp.point)
            offset, cross = pos.offset, pos.cross_track
        else:
            offset, cross = tp.offset, 0.0
        runtime.submit(PositionUpdated(offset=offset, cross_track=cross, ts=tp.t))
        last_ts = tp.t
    runtime.finish_stream(ts=last_ts)


def export_trace_gpx(trace: list[TracePoint], path) -> None:
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<gpx version="1.1" creator="scenic" xmlns="http://www.topografix.com/GPX/1/1">',
        "<trk><trkseg>",
    ]
    epoch = datetime(2000, 1, 1, tzinfo=timezone.utc)
    for tp in trace:
        stamp = epoch.timestamp() + tp.t
        iso = datetime.fromtimestamp(stamp, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%f")
        lines.append(
            f'<trkpt lat="{tp.point.lat:.7f}" lon="{tp.point.lon:.7f}">'
            f"<time>{iso}Z</time></trkpt>"
        )
    lines.append("</trkseg></trk></gpx>")
    Path(path).write_text("\n".join(lines), encoding="utf-8")


def import_trace_gpx(path, route: Route) -> list[TracePoint]:
    """Read a GPX track back into trace points, offsets via route projection."""
    try:
        tree = ElementTree.parse(path)
    except (OSError, ElementTree.ParseError) as exc:
        raise SimulatorError(f"cannot read GPX trace {path}: {exc}") from exc
    points: list[TracePoint] = []
    t0: float | None = None
    for elem in tree.iter():
        if not elem.tag.endswith("trkpt"):
            continue
        point = GeoPoint(lat=float(elem.get("lat")), lon=float(elem.get("lon")))
        stamp = None
        for child in elem:
            if child.tag.endswith("time") and child.text:
                stamp = datetime.fromisoformat(child.text.replace("Z", "+00:00")).timestamp()
        if stamp is None:
            stamp = float(len(points))
        if t0 is None:
            t0 = stamp
        offset = project_to_route(route, point).offset
        points.append(TracePoint(t=stamp - t0, point=point, offset=offset))
    return points

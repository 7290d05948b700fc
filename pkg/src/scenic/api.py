"""HTTP surface for sessions: lifecycle, server-sent journey events with
gapless resume, answer/question/hint/position submission, reflection.

The service holds no state of its own beyond live runtimes: every stream
event is a journey-log entry with the same sequence number, so restarting
the process and streaming from the stored log reproduces the exact feed.
"""
from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Header, HTTPException
from fastapi.responses import Response, StreamingResponse
from pydantic import BaseModel, Field

from .geo import GeoInputError, GeoPoint, Route, project_to_route, route_from_geojson, route_from_gpx
from .journeys import JourneySetup, create_runtime, run_simulated_journey
from .orchestrator import (
    AnswerReceived,
    ChildQuestion,
    EventRejected,
    HintRequested,
    Phase,
    PositionUpdated,
)
from .pois import load_poi_csv, load_poi_geojson, plan_pois
from .providers import MockImageProvider
from .simulator import AnswerScript, SimulatorError, SpeedProfile
from .store import JourneyStore, SessionNotFound, canonical_json, summarize
from .story import Character, StoryTheme

STREAM_POLL_SECONDS = 0.05


class CreateSessionRequest(BaseModel):
    route: str
    pois: str
    theme: StoryTheme
    character: Character
    seed: int = 0
    mode: str = Field(default="simulated", pattern="^(simulated|external-positions)$")
    cruise_speed: float = Field(default=12.0, gt=0)
    stops: list[tuple[float, float]] = Field(default_factory=list)
    answers: str | None = None
    idempotency_key: str | None = None


class AnswerRequest(BaseModel):
    transcript: str
    prompt_id: str | None = None
    ts: float | None = None


class QuestionRequest(BaseModel):
    transcript: str
    ts: float | None = None


class HintRequest(BaseModel):
    ts: float | None = None


class PositionRequest(BaseModel):
    lat: float | None = None
    lon: float | None = None
    offset: float | None = None
    ts: float


@dataclass
class ApiConfig:
    sessions_dir: Path
    fixtures_dir: Path = Path(".")
    provider_mode: str = "mock"
    ui_dir: Path | None = None  # serve the built console when present


@dataclass
class SessionRecord:
    setup: JourneySetup
    mode: str
    descriptor: dict
    thread: threading.Thread | None = None


@dataclass
class Registry:
    records: dict[str, SessionRecord] = field(default_factory=dict)
    by_idempotency_key: dict[str, str] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)


def _resolve(ref: str, fixtures_dir: Path) -> Path:
    path = Path(ref)
    if not path.is_absolute():
        path = fixtures_dir / path
    if not path.exists():
        raise HTTPException(status_code=404, detail=f"asset not found: {ref}")
    return path


def _load_route(path: Path) -> Route:
    try:
        if path.suffix.lower() == ".gpx":
            return route_from_gpx(path)
        return route_from_geojson(path)
    except GeoInputError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


def _load_pois(path: Path):
    try:
        if path.suffix.lower() == ".csv":
            return load_poi_csv(path)
        return load_poi_geojson(path)
    except GeoInputError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


def _descriptor(session_id: str, req: CreateSessionRequest, setup: JourneySetup,
                state_name: str, created_at: str) -> dict:
    return {
        "session_id": session_id,
        "route_ref": req.route,
        "theme": req.theme.value,
        "character": req.character.value,
        "seed": req.seed,
        "mode": req.mode,
        "state": state_name,
        "created_at": created_at,
        "eta_seconds": setup.deps.eta_seconds,
        "length_m": setup.route.length,
        "route_polyline": [[p.lat, p.lon] for p in setup.route.points],
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
            for p in setup.deps.pois
        ],
    }


def create_app(config: ApiConfig) -> FastAPI:
    app = FastAPI(title="scenic", version="0.1.0")
    store = JourneyStore(config.sessions_dir)
    registry = Registry()

    def record_for(session_id: str) -> SessionRecord | None:
        with registry.lock:
            return registry.records.get(session_id)

    def active_runtime(session_id: str):
        record = record_for(session_id)
        if record is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        return record

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    def create_session(req: CreateSessionRequest):
        if req.idempotency_key:
            with registry.lock:
                existing = registry.by_idempotency_key.get(req.idempotency_key)
            if existing:
                record = record_for(existing)
                descriptor = dict(record.descriptor)
                descriptor["state"] = record.setup.runtime.state.phase.value
                return descriptor

        route = _load_route(_resolve(req.route, config.fixtures_dir))
        candidates = _load_pois(_resolve(req.pois, config.fixtures_dir))
        pois = plan_pois(route, candidates)
        script = None
        if req.answers:
            try:
                script = AnswerScript.load(_resolve(req.answers, config.fixtures_dir))
            except SimulatorError as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
        try:
            profile = SpeedProfile(
                cruise_speed=req.cruise_speed, stops=tuple(tuple(s) for s in req.stops)
            )
        except SimulatorError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

        session_id = f"s-{uuid.uuid4().hex[:12]}"
        simulated = req.mode == "simulated"
        setup = create_runtime(
            session_id,
            route,
            pois,
            req.theme,
            req.character,
            req.seed,
            store=store,
            profile=profile,
            script=script,
            route_ref=req.route,
            simulated=True,  # segments auto-finish in both modes
        )
        if not simulated:
            setup.runtime.autopilot.script = None
        descriptor = _descriptor(session_id, req, setup, Phase.CREATED.value,
                                 created_at="2000-01-01T00:00:00Z")
        record = SessionRecord(setup=setup, mode=req.mode, descriptor=descriptor)
        with registry.lock:
            registry.records[session_id] = record
            if req.idempotency_key:
                registry.by_idempotency_key[req.idempotency_key] = session_id
        if simulated:
            thread = threading.Thread(
                target=run_simulated_journey, args=(setup,), daemon=True
            )
            record.thread = thread
            thread.start()
        return descriptor

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        record = record_for(session_id)
        if record is not None:
            descriptor = dict(record.descriptor)
            descriptor["state"] = record.setup.runtime.state.phase.value
            return descriptor
        header, entries = _load_logged(session_id)
        return {
            "session_id": session_id,
            "route_ref": header.get("route_ref"),
            "theme": header.get("theme"),
            "character": header.get("character"),
            "seed": header.get("seed"),
            "mode": header.get("mode"),
            "state": _final_state(entries),
            "created_at": header.get("created_at"),
            "pois": header.get("pois", []),
        }

    def _load_logged(session_id: str):
        try:
            return store.load_session(session_id)
        except SessionNotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    def _final_state(entries: list[dict]) -> str:
        for entry in reversed(entries):
            if entry["kind"] == "state_change":
                return entry["payload"]["to"].split("(")[0]
        return Phase.CREATED.value

    def _sse(entry: dict) -> str:
        return f"id: {entry['seq']}\nevent: {entry['kind']}\ndata: {canonical_json(entry)}\n\n"

    @app.get("/sessions/{session_id}/events")
    def stream_events(
        session_id: str,
        last_seq: int = -1,
        follow: bool = True,
        last_event_id: str | None = Header(default=None),
    ):
        if last_event_id is not None:
            try:
                last_seq = max(last_seq, int(last_event_id))
            except ValueError:
                pass
        record = record_for(session_id)
        if record is None:
            header, entries = _load_logged(session_id)

            def replay_stream():
                for entry in entries:
                    if entry["seq"] > last_seq:
                        yield _sse(entry)

            return StreamingResponse(replay_stream(), media_type="text/event-stream")

        runtime = record.setup.runtime

        if not follow:
            snapshot = runtime.entries_since(last_seq + 1)

            def snapshot_stream():
                for entry in snapshot:
                    yield _sse(entry)

            return StreamingResponse(snapshot_stream(), media_type="text/event-stream")

        def live_stream():
            cond = runtime.subscribe_condition()
            next_seq = last_seq + 1
            try:
                while True:
                    batch = runtime.entries_since(next_seq)
                    for entry in batch:
                        yield _sse(entry)
                    next_seq += len(batch)
                    if runtime.completed and not runtime.entries_since(next_seq):
                        return
                    with cond:
                        cond.wait(timeout=STREAM_POLL_SECONDS)
                    # comment line: keeps idle streams alive and cancellable
                    yield ": keepalive\n\n"
            finally:
                runtime.unsubscribe(cond)

        return StreamingResponse(live_stream(), media_type="text/event-stream")

    def _event_ts(record: SessionRecord, provided: float | None) -> float:
        runtime = record.setup.runtime
        last = runtime.entries[-1]["ts"] if runtime.entries else 0.0
        if provided is None:
            return last
        return max(provided, last)

    def _submit(record: SessionRecord, event) -> dict:
        runtime = record.setup.runtime
        try:
            runtime.advance_to(event.ts)
            entries = runtime.submit(event)
        except EventRejected as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return {"accepted": True, "entries": [e["seq"] for e in entries]}

    @app.post("/sessions/{session_id}/answer")
    def post_answer(session_id: str, req: AnswerRequest):
        record = active_runtime(session_id)
        runtime = record.setup.runtime
        prompt_id = req.prompt_id or runtime.state.active_prompt_id
        if prompt_id is None:
            raise HTTPException(status_code=409, detail="no prompt is awaiting an answer")
        ts = _event_ts(record, req.ts)
        return _submit(record, AnswerReceived(prompt_id=prompt_id, transcript=req.transcript, ts=ts))

    @app.post("/sessions/{session_id}/question")
    def post_question(session_id: str, req: QuestionRequest):
        record = active_runtime(session_id)
        ts = _event_ts(record, req.ts)
        return _submit(record, ChildQuestion(transcript=req.transcript, ts=ts))

    @app.post("/sessions/{session_id}/hint")
    def post_hint(session_id: str, req: HintRequest):
        record = active_runtime(session_id)
        ts = _event_ts(record, req.ts)
        return _submit(record, HintRequested(ts=ts))

    @app.post("/sessions/{session_id}/position")
    def post_position(session_id: str, req: PositionRequest):
        record = active_runtime(session_id)
        if record.mode == "simulated":
            raise HTTPException(
                status_code=409, detail="positions are simulator-owned in simulated mode"
            )
        if req.offset is not None:
            offset, cross = req.offset, 0.0
        elif req.lat is not None and req.lon is not None:
            pos = project_to_route(record.setup.route, GeoPoint(lat=req.lat, lon=req.lon))
            offset, cross = pos.offset, pos.cross_track
        else:
            raise HTTPException(status_code=422, detail="position needs offset or lat+lon")
        ts = _event_ts(record, req.ts)
        return _submit(record, PositionUpdated(offset=offset, cross_track=cross, ts=ts))

    @app.get("/sessions/{session_id}/reflection")
    def get_reflection(session_id: str):
        record = record_for(session_id)
        if record is not None:
            runtime = record.setup.runtime
            if runtime.state.phase not in (Phase.REFLECTING, Phase.COMPLETED):
                raise HTTPException(
                    status_code=409,
                    detail=f"reflection unavailable while {runtime.state.phase.value}",
                )
            for entry in reversed(runtime.entries):
                if entry["kind"] == "reflection":
                    return entry["payload"]["summary"]
            return summarize(runtime.entries).to_payload()
        _, entries = _load_logged(session_id)
        if _final_state(entries) not in ("reflecting", "completed"):
            raise HTTPException(status_code=409, detail="session is not reflecting yet")
        for entry in reversed(entries):
            if entry["kind"] == "reflection":
                return entry["payload"]["summary"]
        return summarize(entries).to_payload()

    @app.get("/assets/{ref:path}")
    def get_asset(ref: str):
        if not ref.startswith("mockimg/") or not ref.endswith(".svg"):
            raise HTTPException(status_code=404, detail="unknown asset")
        return Response(MockImageProvider.render_card(ref), media_type="image/svg+xml")

    if config.ui_dir is not None and Path(config.ui_dir).exists():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=config.ui_dir, html=True), name="console")

    return app

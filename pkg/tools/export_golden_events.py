"""Regenerate the frozen golden-journey fixtures: the byte-exact reference
log (tests/fixtures/golden/golden_log.jsonl) and the frontend's event-stream
fixture. Run from the repo root after intentionally changing anything that
affects the golden journey (templates, fixtures, state machine):

    python3 tools/export_golden_events.py
"""
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent / "tests"))

from conftest import golden_setup  # noqa: E402
from scenic.journeys import run_simulated_journey  # noqa: E402


def main() -> None:
    import tempfile

    from scenic.store import JourneyStore

    with tempfile.TemporaryDirectory() as tmp:
        store = JourneyStore(Path(tmp))
        runtime = run_simulated_journey(golden_setup(store=store))
        log_bytes = store.path_for("golden").read_bytes()
    frozen = Path(__file__).parent.parent / "tests" / "fixtures" / "golden" / "golden_log.jsonl"
    frozen.write_bytes(log_bytes)
    print(f"wrote {frozen} ({len(log_bytes)} bytes)")
    setup = golden_setup(session_id="golden-descriptor")
    descriptor = {
        "session_id": "golden",
        "route_ref": "route.geojson",
        "theme": "history",
        "character": "rabbit",
        "seed": 42,
        "mode": "simulated",
        "state": "created",
        "created_at": "2000-01-01T00:00:00Z",
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
    out = Path(__file__).parent.parent / "frontend" / "tests" / "fixtures" / "golden_events.json"
    out.write_text(json.dumps({"descriptor": descriptor, "events": runtime.entries}))
    print(f"wrote {out} ({len(runtime.entries)} events)")


if __name__ == "__main__":
    main()

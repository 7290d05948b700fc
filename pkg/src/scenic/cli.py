"""Command line entry point: plan routes, simulate journeys, serve the API,
export session logs, and run the statistics harness.

Exit codes: 0 success, 1 runtime failure, 2 input error. Every flag can also
be set through the environment with the SCENIC_ prefix.
"""
from __future__ import annotations

import csv
import json
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

import click

from .fixtures import (
    bloom_contingency_2x3,
    bloom_contingency_pairwise,
    bloom_labels,
    engagement_stats,
    route_nomination_samples,
)
from .geo import GeoInputError, route_from_geojson, route_from_gpx
from .journeys import create_runtime, run_simulated_journey
from .pois import (
    SelectionConfig,
    load_poi_csv,
    load_poi_geojson,
    plan_pois,
    selection_to_geojson,
)
from .simulator import AnswerScript, SimulatorError, SpeedProfile
from .stats import (
    ContingencyTable,
    StatsError,
    bloom_table,
    chi_square,
    cohens_d,
    cohens_d_from_stats,
    describe,
    kruskal_wallis,
    mann_whitney_u,
    paired_t,
)
from .store import (
    IntegrityError,
    JourneyStore,
    SessionNotFound,
    StoreError,
    render_transcript,
    summarize,
)
from .story import Character, StoryTheme

CONTEXT_SETTINGS = {"auto_envvar_prefix": "SCENIC", "help_option_names": ["-h", "--help"]}


def _load_route(path: str):
    try:
        if Path(path).suffix.lower() == ".gpx":
            return route_from_gpx(path)
        return route_from_geojson(path)
    except GeoInputError as exc:
        raise click.UsageError(str(exc)) from exc


def _load_pois(path: str):
    try:
        if Path(path).suffix.lower() == ".csv":
            return load_poi_csv(path)
        return load_poi_geojson(path)
    except GeoInputError as exc:
        raise click.UsageError(str(exc)) from exc


def _parse_stops(text: str) -> tuple[tuple[float, float], ...]:
    if not text:
        return ()
    stops = []
    for part in text.split(","):
        try:
            offset, duration = part.split(":")
            stops.append((float(offset), float(duration)))
        except ValueError as exc:
            raise click.UsageError(
                f"bad stop {part!r}; expected offset_m:duration_s[,...]"
            ) from exc
    return tuple(stops)


@click.group(context_settings=CONTEXT_SETTINGS)
@click.version_option(package_name="scenic")
def main():
    """Location-triggered storytelling engine with a desk-scale simulator."""


@main.command()
@click.option("--route", "route_path", required=True, help="Route GeoJSON or GPX file.")
@click.option("--pois", "pois_path", required=True, help="POI GeoJSON or CSV database.")
@click.option("--out", "out_path", default=None, help="Write the selection as GeoJSON.")
@click.option("--corridor", type=float, default=150.0, show_default=True,
              help="Corridor width in meters.")
@click.option("--min-spacing", type=float, default=800.0, show_default=True)
@click.option("--endpoint-exclusion", type=float, default=1000.0, show_default=True)
def plan(route_path, pois_path, out_path, corridor, min_spacing, endpoint_exclusion):
    """Select interaction anchors along a route and print the plan."""
    route = _load_route(route_path)
    candidates = _load_pois(pois_path)
    config = SelectionConfig(
        corridor_width=corridor,
        min_spacing=min_spacing,
        endpoint_exclusion=endpoint_exclusion,
    )
    selected = plan_pois(route, candidates, config)
    click.echo(
        f"route {route.length / 1000:.1f} km; {len(candidates)} candidates; "
        f"{len(selected)} selected (corridor {config.corridor_width:.0f} m, "
        f"spacing {config.min_spacing:.0f} m, exclusion {config.endpoint_exclusion:.0f} m)"
    )
    for i, poi in enumerate(selected, start=1):
        click.echo(
            f"{i}. {poi.candidate.name} ({poi.candidate.type_tag}) "
            f"offset {poi.offset:.0f} m, trigger {poi.trigger_offset:.0f} m"
        )
    if out_path:
        Path(out_path).write_text(json.dumps(selection_to_geojson(selected), indent=2))
        click.echo(f"selection written to {out_path}")


@main.command()
@click.option("--route", "route_path", required=True)
@click.option("--pois", "pois_path", required=True)
@click.option("--theme", type=click.Choice([t.value for t in StoryTheme]), default="nature",
              show_default=True)
@click.option("--character", type=click.Choice([c.value for c in Character]), default="rabbit",
              show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--speed", type=float, default=12.0, show_default=True, help="Cruise speed m/s.")
@click.option("--stops", default="", help="Stops as offset_m:duration_s[,...].")
@click.option("--answers", "answers_path", default=None, help="Answer script (JSON lines).")
@click.option("--sessions-dir", default="sessions", show_default=True)
@click.option("--session-id", default=None, help="Defaults to sim-<seed>.")
@click.option("--quiet", is_flag=True, help="Skip the transcript, print only the summary.")
def simulate(route_path, pois_path, theme, character, seed, speed, stops, answers_path,
             sessions_dir, session_id, quiet):
    """Run a full simulated journey and write its log."""
    route = _load_route(route_path)
    candidates = _load_pois(pois_path)
    script = None
    if answers_path:
        try:
            script = AnswerScript.load(answers_path)
        except SimulatorError as exc:
            raise click.UsageError(str(exc)) from exc
    try:
        profile = SpeedProfile(cruise_speed=speed, stops=_parse_stops(stops))
    except SimulatorError as exc:
        raise click.UsageError(str(exc)) from exc

    store = JourneyStore(Path(sessions_dir))
    session_id = session_id or f"sim-{seed}"
    pois = plan_pois(route, candidates)
    try:
        setup = create_runtime(
            session_id,
            route,
            pois,
            StoryTheme(theme),
            Character(character),
            seed,
            store=store,
            profile=profile,
            script=script,
            route_ref=str(route_path),
        )
    except StoreError as exc:
        raise click.ClickException(str(exc)) from exc
    runtime = run_simulated_journey(setup)

    header, entries = store.load_session(session_id)
    if not quiet:
        click.echo(render_transcript(header, entries))
    summary = summarize(entries)
    click.echo(f"log: {store.path_for(session_id)}")
    click.echo(
        "reflection: "
        f"{summary.locations_interacted} locations, "
        + ", ".join(f"{g.value}={n}" for g, n in summary.prompts_answered.items())
        + f", unanswered={summary.prompts_unanswered}"
    )


@main.command()
@click.option("--session-id", required=True)
@click.option("--sessions-dir", default="sessions", show_default=True)
@click.option("--reflection-out", default=None, help="Write the reflection summary JSON here.")
def export(session_id, sessions_dir, reflection_out):
    """Render a stored session as a transcript plus reflection JSON."""
    store = JourneyStore(Path(sessions_dir))
    try:
        header, entries = store.load_session(session_id)
    except SessionNotFound as exc:
        raise click.UsageError(str(exc)) from exc
    except IntegrityError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(render_transcript(header, entries))
    summary = summarize(entries).to_payload()
    if reflection_out:
        Path(reflection_out).write_text(json.dumps(summary, indent=2))
        click.echo(f"reflection written to {reflection_out}")
    else:
        click.echo(json.dumps(summary, indent=2))


@main.command()
@click.option("--listen", default="127.0.0.1:8000", show_default=True)
@click.option("--sessions-dir", default="sessions", show_default=True)
@click.option("--fixtures-dir", default=".", show_default=True)
@click.option("--provider-mode", type=click.Choice(["mock", "live"]), default="mock",
              show_default=True)
@click.option("--ui-dir", default=None,
              help="Serve the built web console from this directory at /.")
def serve(listen, sessions_dir, fixtures_dir, provider_mode, ui_dir):
    """Serve the session API until interrupted."""
    import uvicorn

    from .api import ApiConfig, create_app

    try:
        host, port_text = listen.rsplit(":", 1)
        port = int(port_text)
    except ValueError as exc:
        raise click.UsageError(f"bad --listen {listen!r}; expected host:port") from exc
    app = create_app(
        ApiConfig(
            sessions_dir=Path(sessions_dir),
            fixtures_dir=Path(fixtures_dir),
            provider_mode=provider_mode,
            ui_dir=Path(ui_dir) if ui_dir else None,
        )
    )
    import socket

    probe = socket.socket()
    try:
        probe.bind((host, port))
    except OSError as exc:
        raise click.ClickException(f"cannot listen on {listen}: {exc}") from exc
    finally:
        probe.close()
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except OSError as exc:
        raise click.ClickException(f"cannot listen on {listen}: {exc}") from exc
    except SystemExit as exc:
        if exc.code:
            raise click.ClickException(f"server failed to start on {listen}") from exc


def _read_columns(path: str) -> list[list[float]]:
    """Numeric columns from a CSV or JSON file (JSON: rows, or one flat list).

    A CSV header row is skipped if present.
    """
    if Path(path).suffix.lower() == ".json":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise click.UsageError(f"cannot read {path}: {exc}") from exc
        if not isinstance(data, list) or not data:
            raise click.UsageError(f"{path}: expected a non-empty JSON array")
        rows = [r if isinstance(r, list) else [r] for r in data]
        try:
            rows = [[float(x) for x in row] for row in rows]
        except (TypeError, ValueError) as exc:
            raise click.UsageError(f"bad number in {path}: {exc}") from exc
    else:
        try:
            with open(path, newline="", encoding="utf-8") as fh:
                rows = [row for row in csv.reader(fh) if row]
        except OSError as exc:
            raise click.UsageError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise click.UsageError(f"{path} is empty")
    start = 0
    try:
        [float(cell) for cell in rows[0] if cell != ""]
    except ValueError:
        start = 1
    columns: list[list[float]] = []
    for row in rows[start:]:
        for j, cell in enumerate(row):
            while len(columns) <= j:
                columns.append([])
            if cell != "":
                try:
                    columns[j].append(float(cell))
                except ValueError as exc:
                    raise click.UsageError(f"bad number {cell!r} in {path}") from exc
    return [c for c in columns if c]


def _r2(x: float) -> str:
    return str(Decimal(repr(x)).quantize(Decimal("0.01"), ROUND_HALF_UP))


def _echo_result(label: str, result) -> None:
    parts = [f"{label}: statistic={result.statistic:.4f}"]
    if result.df is not None:
        parts.append(f"df={result.df}")
    if result.p is not None:
        parts.append(f"p={result.p:.4g}")
    if result.n is not None:
        parts.append(f"n={result.n}")
    click.echo(", ".join(parts) + f"  [{result.method}]")


@main.command()
@click.option("--paper-table3", is_flag=True,
              help="Reproduce the bundled Bloom-distribution chi-square fixture.")
@click.option("--paper-table5", is_flag=True,
              help="Reproduce the bundled route-nomination comparison fixture.")
@click.option("--paper-engagement", is_flag=True,
              help="Effect size for the bundled engagement summary.")
@click.option("--chi2", "chi2_path", default=None, help="CSV of contingency counts.")
@click.option("--mwu", "mwu_path", default=None, help="CSV with two sample columns.")
@click.option("--describe", "describe_path", default=None, help="CSV; describes column 1.")
@click.option("--paired-t", "paired_path", default=None, help="CSV with pre,post columns.")
@click.option("--cohens-d", "cohens_path", default=None, help="CSV; column 1 vs --benchmark.")
@click.option("--kruskal", "kruskal_path", default=None, help="CSV; one group per column.")
@click.option("--benchmark", type=float, default=0.0, show_default=True)
def stats(paper_table3, paper_table5, paper_engagement, chi2_path, mwu_path, describe_path,
          paired_path, cohens_path, kruskal_path, benchmark):
    """Run the statistics harness on bundled fixtures or CSV inputs."""
    ran_anything = False
    try:
        if paper_table3:
            ran_anything = True
            _echo_result("higher/lower x condition (2x3)", chi_square(bloom_contingency_2x3()))
            for a, b in (("scenic", "parent"), ("scenic", "llm_only"), ("parent", "llm_only")):
                _echo_result(f"{a} vs {b} (2x2)", chi_square(bloom_contingency_pairwise(a, b)))
            click.echo("")
            for row in bloom_table(bloom_labels()):
                levels = ", ".join(
                    f"{name}={pct:.1f}%" for name, pct in row.percentages.items()
                )
                click.echo(
                    f"{row.condition}: {levels}; higher-order={row.higher_order_pct:.1f}%"
                )
        if paper_table5:
            ran_anything = True
            parent, engine = route_nomination_samples()
            for label, sample in (("engine selections", engine), ("parent nominations", parent)):
                mean, sd = describe(sample)
                click.echo(f"{label}: M={_r2(mean)}, SD={_r2(sd)}, n={len(sample)}")
            _echo_result("mann-whitney (parent vs engine)", mann_whitney_u(parent, engine))
        if paper_engagement:
            ran_anything = True
            fx = engagement_stats()
            d = cohens_d_from_stats(fx["mean"], fx["sd"], fx["benchmark"])
            click.echo(
                f"engagement: M={fx['mean']}, SD={fx['sd']}, benchmark={fx['benchmark']}, "
                f"d={d:.2f} (published {fx['published_effect_size']}, from unrounded data)"
            )
        if chi2_path:
            ran_anything = True
            columns = _read_columns(chi2_path)
            rows = list(zip(*columns))
            _echo_result("chi-square", chi_square(ContingencyTable.from_rows(rows)))
        if mwu_path:
            ran_anything = True
            columns = _read_columns(mwu_path)
            if len(columns) < 2:
                raise click.UsageError("--mwu needs two columns")
            _echo_result("mann-whitney", mann_whitney_u(columns[0], columns[1]))
        if describe_path:
            ran_anything = True
            columns = _read_columns(describe_path)
            mean, sd = describe(columns[0])
            click.echo(f"describe: M={mean:.4f}, SD={sd:.4f}, n={len(columns[0])}")
        if paired_path:
            ran_anything = True
            columns = _read_columns(paired_path)
            if len(columns) < 2:
                raise click.UsageError("--paired-t needs two columns")
            _echo_result("paired-t", paired_t(columns[0], columns[1]))
        if cohens_path:
            ran_anything = True
            columns = _read_columns(cohens_path)
            _echo_result("cohens-d", cohens_d(columns[0], benchmark))
        if kruskal_path:
            ran_anything = True
            columns = _read_columns(kruskal_path)
            _echo_result("kruskal-wallis", kruskal_wallis(*columns))
    except StatsError as exc:
        raise click.UsageError(str(exc)) from exc
    if not ran_anything:
        raise click.UsageError("nothing to do; pass a fixture flag or an input file")


if __name__ == "__main__":
    main()

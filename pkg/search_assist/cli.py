"""
Command line interface
Replay, serving, background runs, churn analytics and synthetic data generation
"""
import math
from pathlib import Path
from typing import Annotated, List, Optional

import typer
import uvicorn
from loguru import logger

from search_assist.api.app import create_app
from search_assist.api.schemas.events import collapse_whitespace
from search_assist.api.schemas.suggest import ProfileName, Snapshot
from search_assist.config import MINUTE_MS, PROFILES, EngineConfig, load_config, settings
from search_assist.data.connectors.hose_reader import HoseReader, firehose, merge_streams, query_hose
from search_assist.data.snapshots.repository import SnapshotRepository
from search_assist.exceptions import ConfigError, ScenarioError, SearchAssistError, SnapshotWriteError
from search_assist.services.analytics import churn_series, frequency_timeseries, topk_per_interval, write_csv
from search_assist.services.background import run_background
from search_assist.services.engine import SearchAssistEngine
from search_assist.services.logging import configure_logging
from search_assist.services.replay import ReplayClock, replay as run_replay
from search_assist.services.synth import SynthScenario, gen_churn_stream, gen_synth, write_query_hose


app = typer.Typer(
    name="search-assist",
    help="Real-time related query suggestions from query and tweet streams",
    no_args_is_help=True,
    add_completion=False,
)


def _fail(message: str, code: int) -> None:
    typer.echo(f"error: {message}", err=True)
    raise typer.Exit(code)


def _config(path: Optional[Path]) -> EngineConfig:
    try:
        return load_config(path or settings.engine_config_path)
    except ConfigError as e:
        for error in e.errors:
            typer.echo(f"config: {error}", err=True)
        raise typer.Exit(2)


def _events(queries: Path, tweets: Optional[Path], cfg: EngineConfig):
    query_reader = query_hose(queries)
    readers: List[HoseReader] = [query_reader]
    tweet_events = []
    if tweets is not None:
        tweet_reader = firehose(tweets)
        readers.append(tweet_reader)
        tweet_events = tweet_reader
    return merge_streams(query_reader, tweet_events, cfg.out_of_order_tolerance_ms), readers


@app.callback()
def main(
    ctx: typer.Context,
    log_level: Annotated[str, typer.Option("--log-level", help="Minimum log level")] = settings.log_level,
    log_format: Annotated[str, typer.Option("--log-format", help="text or json")] = settings.log_format,
):
    """Search assistance engine"""
    configure_logging(log_level, log_format)
    ctx.obj = {"log_level": log_level}


@app.command()
def replay(
    queries: Annotated[Path, typer.Option("--queries", exists=True, dir_okay=False, help="Query hose file")],
    out: Annotated[Path, typer.Option("--out", file_okay=False, help="Snapshot output directory")],
    tweets: Annotated[
        Optional[Path], typer.Option("--tweets", exists=True, dir_okay=False, help="Firehose file")
    ] = None,
    config: Annotated[
        Optional[Path], typer.Option("--config", exists=True, dir_okay=False, help="Engine config file")
    ] = None,
    speedup: Annotated[float, typer.Option("--speedup", min=0.0, help="Event time / wall time ratio")] = 1.0,
    fast: Annotated[bool, typer.Option("--fast", help="Replay as fast as possible")] = False,
    flush: Annotated[bool, typer.Option("--flush", help="Run a final cycle after the last event")] = False,
):
    """Replay hose files through the engine, publishing realtime snapshots to --out"""
    cfg = _config(config)
    if not fast and speedup <= 0:
        _fail("--speedup must be positive", 2)

    repository = SnapshotRepository(out, retain_n=cfg.retain_n)
    engine = SearchAssistEngine(cfg, start_generation=repository.latest_generation(ProfileName.REALTIME))

    def publish(snapshot: Snapshot) -> None:
        try:
            repository.write(snapshot)
        except SnapshotWriteError as e:
            logger.error(f"Keeping previous snapshot, publish failed: {e}")

    events, readers = _events(queries, tweets, cfg)
    clock = ReplayClock(speedup=math.inf if fast else speedup)
    try:
        report = run_replay(events, engine, clock=clock, publish=publish, flush=flush)
    except SearchAssistError as e:
        _fail(str(e), 1)
    report.skipped_lines = sum(reader.skipped for reader in readers)
    typer.echo(report.model_dump_json(indent=2))


@app.command()
def serve(
    ctx: typer.Context,
    directory: Annotated[Path, typer.Option("--dir", file_okay=False, help="Snapshot directory")],
    port: Annotated[int, typer.Option("--port", help="Listen port")] = settings.port,
    host: Annotated[str, typer.Option("--host", help="Listen address")] = settings.host,
    mu: Annotated[
        Optional[float], typer.Option("--mu", min=0.0, max=1.0, help="Realtime weight in the blend")
    ] = None,
    top_k: Annotated[Optional[int], typer.Option("--top-k", min=1, help="Suggestions per response")] = None,
    poll_interval: Annotated[
        Optional[float], typer.Option("--poll-interval", min=0.0, help="Seconds between manifest polls")
    ] = None,
):
    """Serve GET /suggest and GET /healthz from a snapshot directory"""
    log_level = (ctx.obj or {}).get("log_level", settings.log_level).lower()
    if log_level not in uvicorn.config.LOG_LEVELS:
        log_level = "info"

    application = create_app(directory, mu=mu, top_k=top_k, poll_interval_seconds=poll_interval)
    logger.info(f"Starting server on {host}:{port}")
    uvicorn.run(application, host=host, port=port, log_level=log_level)


@app.command()
def background(
    queries: Annotated[Path, typer.Option("--queries", exists=True, dir_okay=False, help="Query hose file")],
    out: Annotated[Path, typer.Option("--out", file_okay=False, help="Snapshot output directory")],
    tweets: Annotated[
        Optional[Path], typer.Option("--tweets", exists=True, dir_okay=False, help="Firehose file")
    ] = None,
    profile: Annotated[ProfileName, typer.Option("--profile", case_sensitive=False)] = ProfileName.BACKGROUND,
    config: Annotated[
        Optional[Path], typer.Option("--config", exists=True, dir_okay=False, help="Engine config file")
    ] = None,
    end_ts: Annotated[
        Optional[int], typer.Option("--end-ts", help="Keep only events within the horizon before this time")
    ] = None,
):
    """Run the long-horizon model once and publish its snapshot"""
    cfg = _config(config)
    events, readers = _events(queries, tweets, cfg)
    try:
        manifest_path = run_background(events, out, cfg, profile=PROFILES[profile], end_ts=end_ts)
    except ConfigError as e:
        for error in e.errors:
            typer.echo(f"config: {error}", err=True)
        raise typer.Exit(2)
    except SearchAssistError as e:
        _fail(str(e), 1)
    manifest = SnapshotRepository(out).read_manifest(profile)
    typer.echo(
        f"{manifest_path}: {profile.value} generation {manifest.generation_id}, "
        f"{sum(reader.skipped for reader in readers)} skipped lines"
    )


@app.command()
def churn(
    queries: Annotated[Path, typer.Option("--queries", exists=True, dir_okay=False, help="Query hose file")],
    out: Annotated[Path, typer.Option("--out", dir_okay=False, help="CSV output")],
    k: Annotated[int, typer.Option("--k", min=1, help="Top-k size")] = 1000,
    interval: Annotated[float, typer.Option("--interval", min=0.001, help="Interval length in minutes")] = 60.0,
    granularity: Annotated[str, typer.Option("--granularity", help="term or query")] = "term",
    dedupe_session: Annotated[bool, typer.Option("--dedupe-session", help="Count once per session")] = False,
):
    """Top-k churn between consecutive intervals (interval_start, churn)"""
    if granularity not in ("term", "query"):
        _fail(f"--granularity must be 'term' or 'query', got {granularity!r}", 2)
    try:
        tops = topk_per_interval(
            query_hose(queries), k, int(interval * MINUTE_MS), granularity=granularity, dedupe_session=dedupe_session
        )
    except SearchAssistError as e:
        _fail(str(e), 1)
    table = churn_series(tops)
    write_csv(table, out)
    typer.echo(f"{len(table)} churn rows, mean {table['churn'].mean() if len(table) else 0.0:.4f}")


@app.command()
def freq(
    queries: Annotated[Path, typer.Option("--queries", exists=True, dir_okay=False, help="Query hose file")],
    out: Annotated[Path, typer.Option("--out", dir_okay=False, help="CSV output")],
    track: Annotated[
        Optional[str], typer.Option("--track", help="Comma-separated queries; all queries if omitted")
    ] = None,
    interval: Annotated[float, typer.Option("--interval", min=0.001, help="Interval length in minutes")] = 5.0,
):
    """Normalized per-interval frequency of tracked queries (interval_start, query, freq)"""
    tracked = None
    if track is not None:
        tracked = [q for q in (collapse_whitespace(part) for part in track.split(",")) if q]
    try:
        table = frequency_timeseries(query_hose(queries), tracked, int(interval * MINUTE_MS))
    except SearchAssistError as e:
        _fail(str(e), 1)
    write_csv(table, out)
    typer.echo(f"{len(table)} frequency rows")


@app.command()
def synth(
    scenario: Annotated[Path, typer.Option("--scenario", exists=True, dir_okay=False, help="Scenario JSON")],
    out_prefix: Annotated[str, typer.Option("--out-prefix", help="Writes PREFIX.queries.jsonl / .tweets.jsonl")],
):
    """Generate deterministic hose files from a scenario"""
    try:
        sc = SynthScenario.from_file(scenario)
    except ScenarioError as e:
        for error in e.errors:
            typer.echo(f"scenario: {error}", err=True)
        raise typer.Exit(2)
    query_path, tweet_path = gen_synth(sc, out_prefix)
    typer.echo(f"{query_path}\n{tweet_path}")


@app.command("synth-churn")
def synth_churn(
    out: Annotated[Path, typer.Option("--out", dir_okay=False, help="Query hose output")],
    k: Annotated[int, typer.Option("--k", min=1)] = 100,
    r: Annotated[float, typer.Option("--r", min=0.0, max=1.0, help="Replaced fraction per interval")] = 0.17,
    intervals: Annotated[int, typer.Option("--intervals", min=1)] = 24,
    interval: Annotated[float, typer.Option("--interval", min=0.001, help="Interval length in minutes")] = 60.0,
    seed: Annotated[int, typer.Option("--seed")] = 0,
):
    """Generate a query hose with a planted top-k replacement rate"""
    events = gen_churn_stream(k, r, intervals, int(interval * MINUTE_MS), seed=seed)
    write_query_hose(out, events)
    typer.echo(f"{out}: {len(events)} queries")


if __name__ == "__main__":
    app()

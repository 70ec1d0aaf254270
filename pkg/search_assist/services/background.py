"""
Background Model
Long-horizon batch run over a bounded event window, published under the
Background profile for the serving tier to interpolate with
"""
from pathlib import Path
from typing import Iterable, Optional, Union

from loguru import logger

from search_assist.api.schemas.events import QueryEvent, TweetEvent
from search_assist.api.schemas.suggest import Snapshot, SnapshotEntry
from search_assist.config import BACKGROUND_PROFILE, EngineConfig, Profile, apply_profile
from search_assist.data.snapshots.repository import SnapshotRepository
from search_assist.services.engine import SearchAssistEngine
from search_assist.services.replay import replay
from search_assist.utils.spelling import background_pairwise_job

Event = Union[QueryEvent, TweetEvent]


def within_horizon(events: Iterable[Event], end_ts: int, horizon_ms: int) -> Iterable[Event]:
    """Events in (end_ts - horizon_ms, end_ts]"""
    start = end_ts - horizon_ms
    for event in events:
        if start < event.ts <= end_ts:
            yield event


def build_background_snapshot(
    events: Iterable[Event],
    cfg: EngineConfig,
    profile: Profile = BACKGROUND_PROFILE,
    end_ts: Optional[int] = None,
    start_generation: int = 0
) -> Snapshot:
    """
    Replay `events` through a fresh engine under `profile` and rank once at the end

    Every query that survives the run also goes through the exhaustive
    spelling pass; queries with a correction but no suggestions get a
    spell-only entry.
    """
    profiled = apply_profile(cfg, profile)
    engine = SearchAssistEngine(profiled, profile=profile.name, start_generation=start_generation)

    if end_ts is not None:
        events = within_horizon(events, end_ts, profiled.background_horizon_ms)

    report = replay(events, engine)
    if report.last_ts is None:
        logger.warning("Background run saw no events; publishing an empty snapshot")
        engine.generation += 1
        return Snapshot(generation_id=engine.generation, event_ts=0, profile=profile.name, entries={})

    final_ts = report.last_ts + 1
    engine.run_decay_prune_cycle(final_ts)
    snapshot = engine.run_ranking_cycle(final_ts)

    stats = engine.stores.query_stats
    corrections = background_pairwise_job(sorted(stats.weights(final_ts)), profiled)
    entries = dict(snapshot.entries)
    for text, correction in corrections.items():
        if text not in entries:
            entries[text] = SnapshotEntry(
                query=text, suggestions=[], spell=correction, lang=stats.dominant_lang(text)
            )

    return snapshot.model_copy(update={"entries": entries})


def run_background(
    events: Iterable[Event],
    out_dir: Union[str, Path],
    cfg: EngineConfig,
    profile: Profile = BACKGROUND_PROFILE,
    end_ts: Optional[int] = None
) -> Path:
    """
    Build and publish one background snapshot; generations continue from
    whatever the output directory already holds

    Returns:
        Path of the manifest naming the new snapshot
    """
    repository = SnapshotRepository(out_dir, retain_n=cfg.retain_n)
    snapshot = build_background_snapshot(
        events,
        cfg,
        profile=profile,
        end_ts=end_ts,
        start_generation=repository.latest_generation(profile.name),
    )
    manifest_path = repository.write(snapshot)
    logger.success(
        f"Background snapshot {snapshot.generation_id} written to {out_dir} ({len(snapshot.entries)} entries)"
    )
    return manifest_path

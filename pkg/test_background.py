"""
Tests for the long-horizon background run
"""
import pytest

from search_assist.api.schemas.suggest import ProfileName
from search_assist.config import BACKGROUND_PROFILE, REALTIME_PROFILE, EngineConfig, Profile, apply_profile
from search_assist.data.snapshots.repository import SnapshotRepository
from search_assist.services.background import build_background_snapshot, run_background, within_horizon
from search_assist.services.engine import SearchAssistEngine

from conftest import MINUTE, T0

DAY = 24 * 60 * MINUTE


def _events(make_query):
    events = []
    ts = T0
    for n in range(30):
        ts += MINUTE
        events.append(make_query(f"s{n}", "steve jobs", ts))
        events.append(make_query(f"s{n}", "apple", ts + 1000))
    for n in range(100):
        ts += 1000
        events.append(make_query(f"b{n}", "justin bieber", ts))
    events.append(make_query("typo", "justin beiber", ts + 1000))
    return events


def test_background_snapshot_ranks_and_corrects(make_query):
    snapshot = build_background_snapshot(_events(make_query), EngineConfig())
    assert snapshot.profile is ProfileName.BACKGROUND
    assert snapshot.generation_id == 1
    assert [s.query for s in snapshot.entries["steve jobs"].suggestions] == ["apple"]
    assert snapshot.entries["justin beiber"].spell.query == "justin bieber"


def test_profile_name_alone_does_not_change_results(make_query):
    events = _events(make_query)
    plain = Profile(name=ProfileName.BACKGROUND)
    a = build_background_snapshot(events, EngineConfig(), profile=REALTIME_PROFILE)
    b = build_background_snapshot(events, EngineConfig(), profile=plain)
    assert {q: e.to_record() for q, e in a.entries.items()} == {q: e.to_record() for q, e in b.entries.items()}


def test_empty_input_publishes_empty_snapshot(tmp_path):
    manifest_path = run_background([], tmp_path, EngineConfig())
    assert manifest_path == tmp_path / "MANIFEST.Background"
    snapshot = SnapshotRepository(tmp_path).load_latest(ProfileName.BACKGROUND)
    assert snapshot.entries == {}
    assert snapshot.event_ts == 0
    assert snapshot.generation_id == 1


def test_generations_continue_across_runs(tmp_path, make_query):
    repository = SnapshotRepository(tmp_path)
    run_background(_events(make_query), tmp_path, EngineConfig())
    first = repository.read_manifest(ProfileName.BACKGROUND).generation_id
    run_background(_events(make_query), tmp_path, EngineConfig())
    assert repository.read_manifest(ProfileName.BACKGROUND).generation_id > first


def test_horizon_drops_old_events(make_query):
    old = make_query("s1", "old", T0)
    new = make_query("s2", "new", T0 + 100 * DAY)
    kept = list(within_horizon([old, new], end_ts=T0 + 100 * DAY, horizon_ms=90 * DAY))
    assert kept == [new]


def test_background_profile_decays_slower(make_query):
    cfg = EngineConfig()
    assert BACKGROUND_PROFILE.overrides["halflife_ms"] > cfg.halflife_ms


def test_background_profile_keeps_two_day_old_pair(make_query):
    engine = SearchAssistEngine(apply_profile(EngineConfig(), BACKGROUND_PROFILE), profile=ProfileName.BACKGROUND)
    engine.on_query(make_query("s1", "a", T0))
    engine.on_query(make_query("s1", "b", T0 + 1000))

    later = T0 + 1000 + 2 * DAY
    engine.run_decay_prune_cycle(later)

    cooc = engine.stores.cooccurrence
    assert ("a", "b") in cooc
    assert cooc.weight("a", "b", later) >= 0.82
    assert cooc.weight("a", "b", later) == pytest.approx(2 ** (-2 / 7))

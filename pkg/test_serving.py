"""
Tests for the serving cache, realtime/background interpolation and the HTTP API
"""
import pytest
from fastapi.testclient import TestClient

from search_assist.api.app import create_app
from search_assist.api.schemas.suggest import (
    ProfileName,
    Snapshot,
    SnapshotEntry,
    SpellCorrection,
    Suggestion,
)
from search_assist.data.snapshots.repository import SnapshotRepository
from search_assist.exceptions import InvalidRequest
from search_assist.services.serving import ServingState, SnapshotCache, interpolate, serve_suggestions


def _entry(query, scored, spell=None):
    suggestions = sorted(
        (Suggestion(query=q, score=s) for q, s in scored),
        key=lambda s: (-s.score, s.query),
    )
    return SnapshotEntry(query=query, suggestions=suggestions, spell=spell)


def _snapshot(generation, profile, entries):
    return Snapshot(
        generation_id=generation,
        event_ts=1000 * generation,
        profile=profile,
        entries={e.query: e for e in entries},
    )


class TestInterpolate:
    def test_blend_example(self):
        rt = _entry("a", [("b", 0.8)])
        bg = _entry("a", [("c", 0.9)])
        merged, _ = interpolate(rt, bg, mu=0.7, top_k=10)
        assert [s.query for s in merged] == ["b", "c"]
        assert merged[0].score == pytest.approx(0.56)
        assert merged[1].score == pytest.approx(0.27)

    def test_background_absent_scales_realtime(self):
        rt = _entry("a", [("b", 0.8), ("c", 0.4), ("d", 0.1)])
        merged, _ = interpolate(rt, None, mu=0.5, top_k=10)
        assert [s.query for s in merged] == ["b", "c", "d"]
        assert [s.score for s in merged] == pytest.approx([0.4, 0.2, 0.05])

    def test_shared_candidate_sums_both_sides(self):
        merged, _ = interpolate(_entry("a", [("b", 1.0)]), _entry("a", [("b", 0.5)]), mu=0.5, top_k=10)
        assert merged[0].score == pytest.approx(0.75)

    def test_mu_extremes_reproduce_each_ranking(self):
        rt = _entry("a", [("b", 0.9), ("c", 0.5), ("d", 0.2)])
        bg = _entry("a", [("d", 0.9), ("e", 0.6), ("b", 0.1)])
        assert [s.query for s in interpolate(rt, bg, 1.0, 10)[0]] == ["b", "c", "d"]
        assert [s.query for s in interpolate(rt, bg, 0.0, 10)[0]] == ["d", "e", "b"]

    def test_single_side_keeps_order_at_zero_weight(self):
        spell = SpellCorrection(query="bb", distance=1.0, ratio=20.0)
        rt = _entry("a", [("b", 0.9), ("c", 0.5), ("d", 0.2)], spell=spell)
        merged, merged_spell = interpolate(rt, None, mu=0.0, top_k=10)
        assert [s.query for s in merged] == ["b", "c", "d"]
        assert all(s.score == 0.0 for s in merged)
        assert merged_spell == spell

        bg = _entry("a", [("e", 0.7), ("f", 0.3)])
        merged, _ = interpolate(None, bg, mu=1.0, top_k=10)
        assert [s.query for s in merged] == ["e", "f"]
        assert all(s.score == 0.0 for s in merged)

    def test_truncates_to_top_k(self):
        rt = _entry("a", [("b", 0.9), ("c", 0.5), ("d", 0.2)])
        assert len(interpolate(rt, None, 0.7, 2)[0]) == 2

    def test_realtime_spelling_wins(self):
        rt = _entry("a", [], spell=SpellCorrection(query="rt", distance=1.0, ratio=20.0))
        bg = _entry("a", [], spell=SpellCorrection(query="bg", distance=1.0, ratio=20.0))
        assert interpolate(rt, bg, 0.7, 10)[1].query == "rt"
        assert interpolate(None, bg, 0.7, 10)[1].query == "bg"

    def test_mu_out_of_range(self):
        with pytest.raises(InvalidRequest):
            interpolate(None, None, 1.5, 10)


class TestServeSuggestions:
    def test_unknown_query_is_empty(self):
        response = serve_suggestions("nothing", ServingState(), 0.7, 10)
        assert response.suggestions == []
        assert response.spell is None

    def test_normalizes_request(self):
        state = ServingState(realtime=_snapshot(1, ProfileName.REALTIME, [_entry("#scotus", [("healthcare", 0.9)])]))
        response = serve_suggestions("  #SCOTUS ", state, 0.7, 10)
        assert response.query == "#scotus"
        assert [s.query for s in response.suggestions] == ["healthcare"]
        assert response.generation_ids == {"Realtime": 1, "Background": None}

    @pytest.mark.parametrize("q", [None, "", "   "])
    def test_blank_request_is_invalid(self, q):
        with pytest.raises(InvalidRequest):
            serve_suggestions(q, ServingState(), 0.7, 10)


class TestSnapshotCache:
    def test_no_manifests(self, tmp_path):
        cache = SnapshotCache(tmp_path)
        assert cache.refresh() is False
        assert cache.state.realtime is None
        assert cache.state.last_poll_ts is not None

    def test_loads_new_generations_only(self, tmp_path):
        repo = SnapshotRepository(tmp_path)
        cache = SnapshotCache(tmp_path)
        repo.write(_snapshot(1, ProfileName.REALTIME, [_entry("a", [("b", 1.0)])]))
        assert cache.refresh() is True
        assert cache.refresh() is False
        repo.write(_snapshot(2, ProfileName.REALTIME, [_entry("a", [("c", 1.0)])]))
        repo.write(_snapshot(1, ProfileName.BACKGROUND, [_entry("a", [("d", 1.0)])]))
        assert cache.refresh() is True
        assert cache.state.loaded_generation_ids == {"Realtime": 2, "Background": 1}

    def test_corrupt_newest_keeps_previous(self, tmp_path):
        repo = SnapshotRepository(tmp_path)
        cache = SnapshotCache(tmp_path)
        repo.write(_snapshot(1, ProfileName.REALTIME, [_entry("a", [("b", 1.0)])]))
        cache.refresh()
        repo.write(_snapshot(2, ProfileName.REALTIME, [_entry("a", [("c", 1.0)])]))
        (tmp_path / "snapshot-2.Realtime.jsonl").write_text("{not json\n")

        assert cache.refresh() is False
        assert cache.state.realtime.generation_id == 1
        assert cache.state.last_error is not None
        assert serve_suggestions("a", cache.state, 1.0, 10).suggestions[0].query == "b"


class TestApi:
    @pytest.fixture
    def client(self, tmp_path):
        repo = SnapshotRepository(tmp_path)
        repo.write(_snapshot(1, ProfileName.REALTIME, [_entry("#scotus", [("healthcare", 0.9), ("#aca", 0.4)])]))
        repo.write(_snapshot(1, ProfileName.BACKGROUND, [_entry("#scotus", [("supreme court", 0.8)])]))
        app = create_app(tmp_path, mu=0.7, top_k=10, poll_interval_seconds=0)
        with TestClient(app) as client:
            yield client

    def test_suggest(self, client):
        response = client.get("/suggest", params={"q": "#scotus"})
        assert response.status_code == 200
        body = response.json()
        assert [s["query"] for s in body["suggestions"]] == ["healthcare", "#aca", "supreme court"]
        assert body["generation_ids"] == {"Realtime": 1, "Background": 1}

    def test_unknown_query(self, client):
        response = client.get("/suggest", params={"q": "nobody searches this"})
        assert response.status_code == 200
        assert response.json()["suggestions"] == []

    def test_missing_query_is_400(self, client):
        response = client.get("/suggest")
        assert response.status_code == 400
        assert response.json()["error"] == "InvalidRequest"

    def test_healthz(self, client):
        body = client.get("/healthz").json()
        assert body["status"] == "healthy"
        assert body["generation_ids"] == {"Realtime": 1, "Background": 1}
        assert body["event_ts"] == {"Realtime": 1000, "Background": 1000}
        assert body["last_poll_age_seconds"] >= 0.0

"""
Tests for the synthetic scenario factory and the command line surface
"""
import importlib
import json
from pathlib import Path

import pandas as pd
import pytest
from fastapi.testclient import TestClient
from loguru import logger
from typer.testing import CliRunner

from search_assist.api.app import create_app
from search_assist.api.schemas.suggest import ProfileName
from search_assist.cli import app
from search_assist.data.snapshots.repository import SnapshotRepository
from search_assist.exceptions import ScenarioError
from search_assist.services.logging import configure_logging
from search_assist.services.synth import SynthScenario, gen_synth, generate_events

from conftest import T0

SCENARIOS = Path(__file__).parent / "scenarios"
runner = CliRunner()


@pytest.fixture(autouse=True)
def default_logging():
    yield
    configure_logging()


def _small_scenario(p_follow: float = 0.6) -> dict:
    return {
        "seed": 3,
        "start_ts": T0,
        "duration_ms": 20 * 60_000,
        "base_rate": 100,
        "vocab": [["weather", 5], ["news", 4], ["music", 3], ["movies", 2]],
        "bursts": [{
            "query": "#scotus",
            "t0_ms": 5 * 60_000,
            "ramp_ms": 60_000,
            "hold_ms": 10 * 60_000,
            "decay_ms": 60_000,
            "peak_fraction": 0.3,
            "follow_ups": [{"query": "healthcare", "p_follow": p_follow, "lag_min_ms": 20_000, "lag_max_ms": 90_000}],
        }],
        "tweet_rate": 20,
        "tweet_match_fraction": 0.5,
    }


def _write_scenario(tmp_path, data) -> Path:
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(data))
    return path


class TestSynth:
    def test_same_seed_same_bytes(self, tmp_path):
        scenario = SynthScenario.model_validate(_small_scenario())
        first = gen_synth(scenario, tmp_path / "one")
        second = gen_synth(scenario, tmp_path / "two")
        for a, b in zip(first, second):
            assert a.read_bytes() == b.read_bytes()

    def test_streams_are_time_ordered(self):
        queries, tweets = generate_events(SynthScenario.model_validate(_small_scenario()))
        assert [e.ts for e in queries] == sorted(e.ts for e in queries)
        assert [e.ts for e in tweets] == sorted(e.ts for e in tweets)

    def test_no_follow_ups_when_probability_is_zero(self):
        queries, _ = generate_events(SynthScenario.model_validate(_small_scenario(p_follow=0.0)))
        assert all(e.query.text != "healthcare" for e in queries)
        assert any(e.query.text == "#scotus" for e in queries)

    def test_invalid_scenario_lists_errors(self, tmp_path):
        data = _small_scenario()
        data["bursts"][0]["peak_fraction"] = 0.0
        data["bursts"][0]["follow_ups"][0]["p_follow"] = 1.5
        with pytest.raises(ScenarioError) as exc:
            SynthScenario.from_file(_write_scenario(tmp_path, data))
        assert len(exc.value.errors) == 2

    def test_malformed_scenario_file_is_reported(self, tmp_path):
        path = tmp_path / "scenario.json"
        path.write_text("{\"seed\": 3,")
        with pytest.raises(ScenarioError) as exc:
            SynthScenario.from_file(path)
        assert str(path) in exc.value.errors[0]


class TestCli:
    def test_replay_then_serve(self, tmp_path):
        prefix = tmp_path / "scotus"
        result = runner.invoke(app, ["synth", "--scenario", str(_write_scenario(tmp_path, _small_scenario())),
                                     "--out-prefix", str(prefix)])
        assert result.exit_code == 0, result.output

        out = tmp_path / "snapshots"
        result = runner.invoke(app, [
            "replay",
            "--queries", f"{prefix}.queries.jsonl",
            "--tweets", f"{prefix}.tweets.jsonl",
            "--out", str(out),
            "--fast",
            "--flush",
        ])
        assert result.exit_code == 0, result.output
        assert SnapshotRepository(out).latest_generation(ProfileName.REALTIME) >= 1

        with TestClient(create_app(out, mu=1.0, poll_interval_seconds=0)) as client:
            body = client.get("/suggest", params={"q": "#scotus"}).json()
        assert "healthcare" in [s["query"] for s in body["suggestions"]]

    def test_replay_generations_continue(self, tmp_path):
        prefix = tmp_path / "s"
        gen_synth(SynthScenario.model_validate(_small_scenario()), prefix)
        out = tmp_path / "snapshots"
        args = ["replay", "--queries", f"{prefix}.queries.jsonl", "--out", str(out), "--fast", "--flush"]
        assert runner.invoke(app, args).exit_code == 0
        first = SnapshotRepository(out).latest_generation(ProfileName.REALTIME)
        assert runner.invoke(app, args).exit_code == 0
        assert SnapshotRepository(out).latest_generation(ProfileName.REALTIME) == 2 * first

    def test_missing_file_is_usage_error(self, tmp_path):
        result = runner.invoke(app, ["replay", "--queries", str(tmp_path / "nope.jsonl"), "--out", str(tmp_path)])
        assert result.exit_code == 2

    def test_invalid_config_exits_2(self, tmp_path):
        prefix = tmp_path / "s"
        gen_synth(SynthScenario.model_validate(_small_scenario()), prefix)
        config = tmp_path / "engine.conf"
        config.write_text("halflife_ms = 0\n")
        result = runner.invoke(app, [
            "replay", "--queries", f"{prefix}.queries.jsonl", "--out", str(tmp_path / "o"),
            "--config", str(config), "--fast",
        ])
        assert result.exit_code == 2
        assert "halflife must be positive" in result.output

    def test_invalid_scenario_exits_2(self, tmp_path):
        data = _small_scenario()
        data["base_rate"] = -1
        result = runner.invoke(app, ["synth", "--scenario", str(_write_scenario(tmp_path, data)),
                                     "--out-prefix", str(tmp_path / "x")])
        assert result.exit_code == 2

    def test_background_command(self, tmp_path):
        prefix = tmp_path / "s"
        gen_synth(SynthScenario.model_validate(_small_scenario()), prefix)
        out = tmp_path / "bg"
        result = runner.invoke(app, [
            "background", "--queries", f"{prefix}.queries.jsonl", "--tweets", f"{prefix}.tweets.jsonl",
            "--profile", "Background", "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        snapshot = SnapshotRepository(out).load_latest(ProfileName.BACKGROUND)
        assert "healthcare" in [s.query for s in snapshot.entries["#scotus"].suggestions]

    def test_churn_on_constant_vocabulary(self, tmp_path):
        hose = tmp_path / "q.jsonl"
        hose.write_text("".join(
            json.dumps({"sid": f"s{i}", "q": f"q{i % 3}", "src": "typed", "ts": T0 + i * 60_000}) + "\n"
            for i in range(240)
        ))
        out = tmp_path / "churn.csv"
        result = runner.invoke(app, ["churn", "--queries", str(hose), "--k", "3", "--interval", "60", "--out", str(out)])
        assert result.exit_code == 0, result.output
        table = pd.read_csv(out)
        assert list(table.columns) == ["interval_start", "churn"]
        assert len(table) > 0
        assert (table["churn"] == 0.0).all()

    def test_synth_then_freq_matches_peak(self, tmp_path):
        prefix = tmp_path / "jobs"
        assert runner.invoke(app, ["synth", "--scenario", str(SCENARIOS / "steve_jobs.json"),
                                   "--out-prefix", str(prefix)]).exit_code == 0
        out = tmp_path / "freq.csv"
        result = runner.invoke(app, [
            "freq", "--queries", f"{prefix}.queries.jsonl", "--track", "Steve Jobs, apple",
            "--interval", "5", "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        table = pd.read_csv(out)
        peak = table[table["query"] == "steve jobs"]["freq"].max()
        assert abs(peak - 0.15) <= 0.01


class TestServeLogging:
    def test_serve_passes_cli_level_to_server(self, tmp_path, monkeypatch):
        calls = []

        def fake_run(application, **kwargs):
            logger.debug("server starting")
            calls.append(kwargs)

        monkeypatch.setattr("search_assist.cli.uvicorn.run", fake_run)
        result = runner.invoke(app, ["--log-level", "DEBUG", "serve", "--dir", str(tmp_path), "--poll-interval", "0"])
        assert result.exit_code == 0, result.output
        assert calls[0]["log_level"] == "debug"
        assert "server starting" in result.output

    def test_importing_app_factory_keeps_logging(self, capsys):
        import search_assist.api.app as app_module

        configure_logging("DEBUG")
        importlib.reload(app_module)
        logger.debug("still debug")
        assert "still debug" in capsys.readouterr().err

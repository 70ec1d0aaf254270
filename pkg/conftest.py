"""
Shared pytest fixtures for the search assistance engine tests
"""
from typing import Callable

import pytest

from search_assist.api.schemas.events import QueryEvent, QuerySource, TweetEvent, normalize_query
from search_assist.config import EngineConfig, load_config

T0 = 1_340_890_200_000
MINUTE = 60_000


@pytest.fixture
def cfg() -> EngineConfig:
    """Default realtime configuration"""
    return EngineConfig()


@pytest.fixture
def counting_cfg() -> EngineConfig:
    """Decay off, unit weights, no thresholds: store weights are plain counts"""
    return load_config(overrides={
        "decay_fn": "step",
        "step_age_ms": 10 ** 15,
        "prune_threshold": 0.0,
        "source_weights": {"typed": 1.0, "hashtag_click": 1.0, "trend_click": 1.0, "related_click": 1.0},
        "tweet_weight": 1.0,
        "rate_limit_max": 0,
        "session_idle_expiry_ms": 10 ** 15,
        "min_pair_support": 0.0,
        "querylike_min_count": 1,
    })


@pytest.fixture
def make_query() -> Callable[..., QueryEvent]:
    def _make(session_id: str, text: str, ts: int, source: str = "typed", lang: str = "en") -> QueryEvent:
        return QueryEvent(
            session_id=session_id,
            query=normalize_query(text),
            source=QuerySource(source),
            lang=lang,
            ts=ts,
        )
    return _make


@pytest.fixture
def make_tweet() -> Callable[..., TweetEvent]:
    def _make(tweet_id: str, text: str, ts: int, lang: str = "en") -> TweetEvent:
        return TweetEvent(tweet_id=tweet_id, text=text, lang=lang, ts=ts)
    return _make

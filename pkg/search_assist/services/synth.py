"""
Synthetic Hose Factory
Seeded generators for query hose and firehose files: background traffic
with bursty breaking-news scenarios, and streams with a controlled top-k churn
"""
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import orjson
from loguru import logger
from pydantic import BaseModel, Field, ValidationError, model_validator

from search_assist.api.schemas.events import QueryEvent, QuerySource, TweetEvent, normalize_query
from search_assist.config import MINUTE_MS, SECOND_MS
from search_assist.exceptions import ScenarioError


class FollowUp(BaseModel):
    """A query that burst sessions issue after the burst query"""
    query: str
    p_follow: float = Field(..., ge=0.0, le=1.0)
    lag_min_ms: int = Field(20 * SECOND_MS, ge=0)
    lag_max_ms: int = Field(90 * SECOND_MS, ge=0)

    @model_validator(mode="after")
    def check_lag(self) -> "FollowUp":
        if self.lag_max_ms < self.lag_min_ms:
            raise ValueError(f"lag_max_ms ({self.lag_max_ms}) < lag_min_ms ({self.lag_min_ms})")
        return self


class Burst(BaseModel):
    """
    A breaking-news spike of one query

    Its share of the query stream rises linearly from 0 at t0 to
    peak_fraction over ramp_ms, holds for hold_ms, then falls back to 0
    over decay_ms.
    """
    query: str
    t0_ms: int = Field(..., ge=0, description="Offset from the scenario start")
    ramp_ms: int = Field(5 * MINUTE_MS, ge=0)
    hold_ms: int = Field(20 * MINUTE_MS, ge=0)
    decay_ms: int = Field(20 * MINUTE_MS, ge=0)
    peak_fraction: float = Field(..., gt=0.0, le=1.0)
    follow_ups: List[FollowUp] = Field(default_factory=list)
    sessions_affected: Optional[int] = Field(None, ge=0, description="Cap on burst sessions")

    def intensity(self, offset_ms: int) -> float:
        """Share of the stream at `offset_ms` after the scenario start"""
        t = offset_ms - self.t0_ms
        if t < 0:
            return 0.0
        if t < self.ramp_ms:
            return self.peak_fraction * t / self.ramp_ms
        t -= self.ramp_ms
        if t < self.hold_ms:
            return self.peak_fraction
        t -= self.hold_ms
        if t < self.decay_ms:
            return self.peak_fraction * (1.0 - t / self.decay_ms)
        return 0.0


class SynthScenario(BaseModel):
    """A seeded synthetic traffic scenario"""
    seed: int = 0
    start_ts: int = Field(..., gt=0)
    duration_ms: int = Field(..., gt=0)
    base_rate: int = Field(..., ge=0, description="Background queries per minute")
    vocab: List[Tuple[str, float]] = Field(..., min_length=1)
    bursts: List[Burst] = Field(default_factory=list)
    tweet_rate: int = Field(0, ge=0, description="Tweets per minute")
    tweet_match_fraction: float = Field(0.5, ge=0.0, le=1.0)
    lang: str = "en"

    @model_validator(mode="after")
    def check_vocab(self) -> "SynthScenario":
        if any(w <= 0 for _, w in self.vocab):
            raise ValueError("vocab weights must be positive")
        if any(b.t0_ms >= self.duration_ms for b in self.bursts):
            raise ValueError("burst t0_ms must fall inside the scenario duration")
        return self

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "SynthScenario":
        """
        Raises:
            ScenarioError: listing every validation problem
        """
        try:
            data = orjson.loads(Path(path).read_bytes())
            return cls.model_validate(data)
        except orjson.JSONDecodeError as e:
            raise ScenarioError([f"{path}: {e}"]) from e
        except ValidationError as e:
            raise ScenarioError([
                f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
            ]) from e


# Filler tokens for tweets; never issued as queries
_FILLER = [f"zz{i:03d}" for i in range(200)]


def _query_event(session_id: str, text: str, ts: int, lang: str) -> QueryEvent:
    return QueryEvent(
        session_id=session_id,
        query=normalize_query(text),
        source=QuerySource.TYPED,
        lang=lang,
        ts=ts,
    )


class _Generator:
    """Minute-by-minute scenario expansion over one numpy Generator"""

    def __init__(self, scenario: SynthScenario):
        self.sc = scenario
        self.rng = np.random.default_rng(scenario.seed)
        texts, weights = zip(*scenario.vocab)
        self.vocab = list(texts)
        self.p = np.asarray(weights, dtype=float) / float(np.sum(weights))
        self.queries: List[QueryEvent] = []
        self.tweets: List[TweetEvent] = []
        self.session_seq = 0
        self.tweet_seq = 0
        # follow-up events scheduled into later minutes, by minute index
        self.scheduled: Dict[int, int] = {}
        self.burst_sessions = [0] * len(scenario.bursts)

    def _session_id(self) -> str:
        self.session_seq += 1
        return f"s{self.sc.seed}-{self.session_seq}"

    def _minute_ts(self, minute: int, n: int) -> np.ndarray:
        base = self.sc.start_ts + minute * MINUTE_MS
        return np.sort(base + self.rng.integers(0, MINUTE_MS, size=n))

    def _background(self, minute: int) -> None:
        remaining = self.sc.base_rate
        while remaining > 0:
            length = int(min(remaining, self.rng.integers(1, 4)))
            session_id = self._session_id()
            picks = self.rng.choice(len(self.vocab), size=length, p=self.p)
            for ts, idx in zip(self._minute_ts(minute, length), picks):
                self.queries.append(_query_event(session_id, self.vocab[idx], int(ts), self.sc.lang))
            remaining -= length

    def _burst(self, minute: int, index: int, burst: Burst) -> List[str]:
        """Emit this minute's burst sessions; returns the queries of the minute's sessions"""
        fraction = burst.intensity(minute * MINUTE_MS)
        if fraction <= 0.0:
            return []

        # burst share of everything landing in this minute, follow-ups included
        others = self.sc.base_rate + self.scheduled.get(minute, 0)
        sessions = int(round(fraction * others / (1.0 - fraction))) if fraction < 1.0 else self.sc.base_rate
        if burst.sessions_affected is not None:
            sessions = min(sessions, burst.sessions_affected - self.burst_sessions[index])
        if sessions <= 0:
            return []
        self.burst_sessions[index] += sessions

        end_ts = self.sc.start_ts + self.sc.duration_ms
        mentioned = [burst.query]
        for ts in self._minute_ts(minute, sessions):
            session_id = self._session_id()
            self.queries.append(_query_event(session_id, burst.query, int(ts), self.sc.lang))
            for follow in burst.follow_ups:
                if self.rng.random() >= follow.p_follow:
                    continue
                follow_ts = int(ts) + int(self.rng.integers(follow.lag_min_ms, follow.lag_max_ms + 1))
                if follow_ts >= end_ts:
                    continue
                self.queries.append(_query_event(session_id, follow.query, follow_ts, self.sc.lang))
                landing = (follow_ts - self.sc.start_ts) // MINUTE_MS
                if landing > minute:
                    self.scheduled[landing] = self.scheduled.get(landing, 0) + 1
                mentioned.append(follow.query)
        return mentioned

    def _tweets(self, minute: int, topical: List[str]) -> None:
        for ts in self._minute_ts(minute, self.sc.tweet_rate):
            words = list(self.rng.choice(_FILLER, size=int(self.rng.integers(3, 8))))
            if self.rng.random() < self.sc.tweet_match_fraction:
                if topical:
                    picks = self.rng.choice(len(topical), size=min(2, len(topical)), replace=False)
                    mentions = [topical[i] for i in picks]
                else:
                    mentions = [self.vocab[int(self.rng.choice(len(self.vocab), p=self.p))]]
                for mention in mentions:
                    words.insert(int(self.rng.integers(0, len(words) + 1)), mention)
            self.tweet_seq += 1
            self.tweets.append(TweetEvent(
                tweet_id=f"t{self.sc.seed}-{self.tweet_seq}",
                text=" ".join(words),
                lang=self.sc.lang,
                ts=int(ts),
            ))

    def run(self) -> Tuple[List[QueryEvent], List[TweetEvent]]:
        minutes = -(-self.sc.duration_ms // MINUTE_MS)
        for minute in range(minutes):
            self._background(minute)
            topical: List[str] = []
            for index, burst in enumerate(self.sc.bursts):
                for text in self._burst(minute, index, burst):
                    if text not in topical:
                        topical.append(text)
            self._tweets(minute, topical)

        self.queries.sort(key=lambda e: (e.ts, e.session_id))
        self.tweets.sort(key=lambda e: (e.ts, e.tweet_id))
        return self.queries, self.tweets


def generate_events(scenario: SynthScenario) -> Tuple[List[QueryEvent], List[TweetEvent]]:
    """Expand a scenario into time-ordered query and tweet events; a pure function of the scenario"""
    queries, tweets = _Generator(scenario).run()
    logger.info(f"Generated {len(queries)} queries and {len(tweets)} tweets (seed={scenario.seed})")
    return queries, tweets


def query_record(event: QueryEvent) -> bytes:
    return orjson.dumps({
        "sid": event.session_id,
        "q": event.query.text,
        "src": event.source.value,
        "lang": event.lang,
        "ts": event.ts,
    })


def tweet_record(event: TweetEvent) -> bytes:
    return orjson.dumps({"tid": event.tweet_id, "text": event.text, "lang": event.lang, "ts": event.ts})


def _write_lines(path: Path, records: List[bytes]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(b"".join(r + b"\n" for r in records))


def write_query_hose(path: Union[str, Path], events: List[QueryEvent]) -> Path:
    path = Path(path)
    _write_lines(path, [query_record(e) for e in events])
    return path


def write_firehose(path: Union[str, Path], events: List[TweetEvent]) -> Path:
    path = Path(path)
    _write_lines(path, [tweet_record(e) for e in events])
    return path


def gen_synth(scenario: SynthScenario, out_prefix: Union[str, Path]) -> Tuple[Path, Path]:
    """
    Write `<prefix>.queries.jsonl` and `<prefix>.tweets.jsonl`

    Returns:
        (query hose path, firehose path)
    """
    queries, tweets = generate_events(scenario)
    prefix = str(out_prefix)
    query_path = write_query_hose(f"{prefix}.queries.jsonl", queries)
    tweet_path = write_firehose(f"{prefix}.tweets.jsonl", tweets)
    logger.success(f"Wrote {query_path} and {tweet_path}")
    return query_path, tweet_path


def gen_churn_stream(
    k: int,
    r: float,
    intervals: int,
    interval_len: int,
    seed: int = 0,
    start_ts: int = 1_340_888_400_000,
    tail_size: int = 200
) -> List[QueryEvent]:
    """
    Single-term query stream whose top-k loses exactly round(r*k) terms per interval

    Top terms occur 10-15 times per interval and tail terms 1-3 times, so
    counting recovers the planted top-k exactly. start_ts should be aligned
    to interval_len.
    """
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"r must be in [0, 1], got {r}")
    rng = np.random.default_rng(seed)
    replaced = int(round(r * k))

    fresh = 0

    def new_term() -> str:
        nonlocal fresh
        fresh += 1
        return f"top{fresh:05d}"

    top = [new_term() for _ in range(k)]
    tail = [f"tail{i:04d}" for i in range(tail_size)]
    events: List[QueryEvent] = []
    session = 0
    for i in range(intervals):
        if i > 0 and replaced:
            dropped = set(rng.choice(len(top), size=replaced, replace=False).tolist())
            top = [t for j, t in enumerate(top) if j not in dropped] + [new_term() for _ in range(replaced)]

        units = [t for t in top for _ in range(int(rng.integers(10, 16)))]
        units += [t for t in tail for _ in range(int(rng.integers(1, 4)))]
        offsets = np.sort(rng.integers(0, interval_len, size=len(units)))
        order = rng.permutation(len(units))
        base = start_ts + i * interval_len
        for offset, idx in zip(offsets, order):
            session += 1
            events.append(_query_event(f"c{seed}-{session}", units[idx], int(base + offset), "en"))

    logger.info(f"Generated churn stream: k={k}, r={r}, {intervals} intervals, {len(events)} queries")
    return events

"""
Sessions Store
Sliding windows of each session's recent queries plus per-session dedup metadata
"""
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, List, Set, Tuple

from loguru import logger

from search_assist.api.schemas.events import QueryEvent, QuerySource
from search_assist.config import EngineConfig


@dataclass(slots=True)
class WindowEntry:
    query: str
    ts: int
    source: QuerySource


@dataclass
class SessionRecord:
    """
    One session's sliding window, newest last

    seen_queries and seen_pairs outlive window eviction: a pair increments
    the cooccurrence store at most once per session.
    """
    session_id: str
    window: Deque[WindowEntry] = field(default_factory=deque)
    seen_queries: Set[str] = field(default_factory=set)
    seen_pairs: Set[Tuple[str, str]] = field(default_factory=set)
    last_activity_ts: int = 0
    recent: Dict[str, Deque[int]] = field(default_factory=dict)


PairUpdate = Tuple[str, str, float]


class SessionStore:
    """In-memory sessions keyed by session id"""

    def __init__(self, cfg: EngineConfig):
        self.cfg = cfg
        self.sessions: Dict[str, SessionRecord] = {}

    def __len__(self) -> int:
        return len(self.sessions)

    def get(self, session_id: str):
        return self.sessions.get(session_id)

    def has_seen(self, session_id: str, query: str) -> bool:
        record = self.sessions.get(session_id)
        return record is not None and query in record.seen_queries

    def allow(self, ev: QueryEvent) -> bool:
        """
        Per-session rate cap

        More than rate_limit_max identical queries inside rate_limit_window_ms
        are dropped. Only sessions that already exist are checked.
        """
        limit = self.cfg.rate_limit_max
        record = self.sessions.get(ev.session_id)
        if limit <= 0 or record is None:
            return True
        times = record.recent.get(ev.query.text)
        if times is None:
            return True
        horizon = ev.ts - self.cfg.rate_limit_window_ms
        while times and times[0] <= horizon:
            times.popleft()
        return len(times) < limit

    def observe(self, ev: QueryEvent) -> List[PairUpdate]:
        """
        Append a query to its session and return the new cooccurrence pairs

        Returns one (prev, next, increment) per distinct previous window query
        not yet paired with this query in the session; the increment is the
        geometric mean of both events' source weights.
        """
        cfg = self.cfg
        record = self.sessions.get(ev.session_id)
        if record is None:
            record = SessionRecord(session_id=ev.session_id)
            self.sessions[ev.session_id] = record
            logger.debug(f"New session {ev.session_id}")

        window = record.window
        oldest_allowed = ev.ts - cfg.session_window_age_ms
        while window and window[0].ts < oldest_allowed:
            window.popleft()
        window.append(WindowEntry(query=ev.query.text, ts=ev.ts, source=ev.source))
        while len(window) > cfg.session_window_size:
            window.popleft()

        text = ev.query.text
        weights = cfg.source_weights
        previous: Dict[str, float] = {}
        for entry in list(window)[:-1]:
            if entry.query != text:
                previous[entry.query] = weights[entry.source]

        next_weight = weights[ev.source]
        pairs: List[PairUpdate] = []
        for prev, prev_weight in previous.items():
            key = (prev, text)
            if key in record.seen_pairs:
                continue
            record.seen_pairs.add(key)
            pairs.append((prev, text, math.sqrt(prev_weight * next_weight)))

        record.seen_queries.add(text)
        if ev.ts > record.last_activity_ts:
            record.last_activity_ts = ev.ts
        if cfg.rate_limit_max > 0:
            record.recent.setdefault(text, deque()).append(ev.ts)
        return pairs

    def prune(self, now: int) -> int:
        """Drop sessions idle for longer than session_idle_expiry_ms"""
        cutoff = now - self.cfg.session_idle_expiry_ms
        expired = [sid for sid, record in self.sessions.items() if record.last_activity_ts < cutoff]
        for sid in expired:
            del self.sessions[sid]
        return len(expired)

"""
In-memory stores of the backend engine
Sessions, query statistics and query cooccurrence statistics
"""
from loguru import logger
from pydantic import BaseModel

from search_assist.config import EngineConfig
from search_assist.data.stores.cooccurrence import CoocEntry, CooccurrenceStore
from search_assist.data.stores.decayed import DecayedWeight, DecayModel
from search_assist.data.stores.query_stats import QueryStatsEntry, QueryStatsStore
from search_assist.data.stores.sessions import SessionRecord, SessionStore


class PruneReport(BaseModel):
    """Removals made by one decay/prune cycle"""
    queries_removed: int = 0
    pairs_removed: int = 0
    sessions_removed: int = 0


class SearchAssistStores:
    """The three stores sharing one configuration and decay model"""

    def __init__(self, cfg: EngineConfig):
        self.cfg = cfg
        self.decay = DecayModel(cfg)
        self.sessions = SessionStore(cfg)
        self.query_stats = QueryStatsStore(cfg, self.decay)
        self.cooccurrence = CooccurrenceStore(cfg, self.decay)

    def _tweet_only_unqueried(self, prev: str, next_: str, entry: CoocEntry) -> bool:
        # pairs never seen in a query session are kept only while a constituent is query-like
        if entry.from_session:
            return False
        stats = self.query_stats
        return not stats.is_query_like(prev) and not stats.is_query_like(next_)

    def prune_all(self, now: int) -> PruneReport:
        """
        Materialize all weights at `now` and drop everything below prune_threshold

        Pairs whose endpoints were removed as queries stay unless they are
        themselves below threshold (or tweet-only with no query-like endpoint).
        """
        queries_removed = len(self.query_stats.prune(now))
        pairs_removed = self.cooccurrence.prune(now, drop=self._tweet_only_unqueried)
        sessions_removed = self.sessions.prune(now)

        report = PruneReport(
            queries_removed=queries_removed,
            pairs_removed=pairs_removed,
            sessions_removed=sessions_removed,
        )
        logger.debug(f"Prune at {now}: {report.model_dump()}")
        return report


__all__ = [
    "CoocEntry",
    "CooccurrenceStore",
    "DecayedWeight",
    "DecayModel",
    "PruneReport",
    "QueryStatsEntry",
    "QueryStatsStore",
    "SearchAssistStores",
    "SessionRecord",
    "SessionStore",
]

"""
Search Assistance Engine
The backend data flow: query path, tweet path, decay/prune cycles and
ranking cycles over the three in-memory stores
"""
import itertools
import threading
from typing import List, Optional, Union

from loguru import logger
from nltk.util import everygrams
from pydantic import BaseModel

from search_assist.api.schemas.events import Query, QueryEvent, TweetEvent, collapse_whitespace
from search_assist.api.schemas.suggest import (
    ProfileName,
    Snapshot,
    SnapshotEntry,
    Suggestion,
    suggestion_sort_key,
)
from search_assist.config import EngineConfig, Ranker, validate_config
from search_assist.data.stores import PruneReport, SearchAssistStores
from search_assist.exceptions import ConfigError, InsufficientSupport, Undefined
from search_assist.utils.association import ContingencyTable, build_table, chi_square, features
from search_assist.utils.spelling import SpellingIndex


class EngineCounters(BaseModel):
    """Running totals reported by replays and the health of a run"""
    queries: int = 0
    tweets: int = 0
    rate_limited: int = 0
    tweet_matches: int = 0
    session_pairs: int = 0
    tweet_pairs: int = 0
    decay_cycles: int = 0
    ranking_cycles: int = 0


class SearchAssistEngine:
    """
    Maintains query, session and cooccurrence statistics and ranks suggestions

    Ingestion and cycles are serialized through one lock, so the stores have
    a single writer even when events arrive from more than one reader thread.
    """

    def __init__(
        self,
        cfg: EngineConfig,
        profile: ProfileName = ProfileName.REALTIME,
        start_generation: int = 0
    ):
        errors = validate_config(cfg)
        if errors:
            raise ConfigError(errors)

        self.cfg = cfg
        self.profile = profile
        self.generation = start_generation
        self.stores = SearchAssistStores(cfg)
        self.counters = EngineCounters()
        self.lock = threading.RLock()

        logger.info(
            f"Engine initialized: profile={profile.value}, ranker={cfg.ranker.value}, "
            f"decay={cfg.decay_fn.value}, halflife={cfg.halflife_ms} ms"
        )

    # ------------------------------------------------------------------
    # Ingestion
    # ------------------------------------------------------------------

    def ingest(self, event: Union[QueryEvent, TweetEvent]) -> None:
        if isinstance(event, QueryEvent):
            self.on_query(event)
        else:
            self.on_tweet(event)

    def on_query(self, ev: QueryEvent) -> bool:
        """
        Query path: update query statistics, then the session, then the
        cooccurrences formed with every earlier query of the window

        Returns:
            False if the per-session rate cap dropped the event
        """
        stores = self.stores
        with self.lock:
            if not stores.sessions.allow(ev):
                self.counters.rate_limited += 1
                logger.debug(f"Rate limited {ev.query.text!r} in session {ev.session_id}")
                return False

            text = ev.query.text
            first_in_session = not stores.sessions.has_seen(ev.session_id, text)
            stores.query_stats.update(
                text,
                self.cfg.source_weights[ev.source],
                ev.lang,
                ev.ts,
                new_context=first_in_session,
            )

            pairs = stores.sessions.observe(ev)
            for prev, nxt, increment in pairs:
                stores.cooccurrence.update(prev, nxt, increment, ev.ts)

            self.counters.queries += 1
            self.counters.session_pairs += len(pairs)
        return True

    def extract_query_like_ngrams(self, text: str, now: int) -> List[Query]:
        """
        Every 1..max_ngram token n-gram of `text` that has been issued as a
        standalone query at least querylike_min_count times (and at least once)
        """
        stats = self.stores.query_stats
        min_count = max(self.cfg.querylike_min_count, 1)
        matched = {}
        for gram in everygrams(text.split(), min_len=1, max_len=self.cfg.max_ngram):
            candidate = collapse_whitespace(" ".join(gram))
            if candidate and candidate not in matched and stats.raw_count(candidate) >= min_count:
                matched[candidate] = None
        return [Query.model_construct(text=candidate) for candidate in matched]

    def on_tweet(self, ev: TweetEvent) -> None:
        """
        Tweet path: the tweet is the session; matched n-grams gain weight
        (never raw count) and every unordered pair is reinforced both ways
        """
        cfg = self.cfg
        stores = self.stores
        with self.lock:
            matched = [q.text for q in self.extract_query_like_ngrams(ev.text, ev.ts)]
            for text in matched:
                stores.query_stats.update(
                    text, cfg.tweet_weight, ev.lang, ev.ts, new_context=True, count_raw=False
                )

            cooc = stores.cooccurrence
            for a, b in itertools.combinations(matched, 2):
                for prev, nxt in ((a, b), (b, a)):
                    if cfg.tweet_pairs_require_session and (prev, nxt) not in cooc:
                        continue
                    cooc.update(prev, nxt, cfg.tweet_weight, ev.ts, from_session=False)
                    self.counters.tweet_pairs += 1

            self.counters.tweets += 1
            self.counters.tweet_matches += len(matched)

    # ------------------------------------------------------------------
    # Cycles
    # ------------------------------------------------------------------

    def run_decay_prune_cycle(self, now: int) -> PruneReport:
        """Materialize all decay at `now` and prune queries, pairs and idle sessions"""
        with self.lock:
            report = self.stores.prune_all(now)
            self.counters.decay_cycles += 1
        logger.info(
            f"Decay/prune at {now}: -{report.queries_removed} queries, -{report.pairs_removed} pairs, "
            f"-{report.sessions_removed} sessions ({len(self.stores.query_stats)} queries, "
            f"{len(self.stores.cooccurrence)} pairs live)"
        )
        return report

    def _score(self, tbl: ContingencyTable, crf: float, pmi_value: float, llr_value: float) -> float:
        cfg = self.cfg
        ranker = cfg.ranker
        if ranker is Ranker.CRF:
            return crf
        if ranker is Ranker.PMI:
            return pmi_value
        if ranker is Ranker.LLR:
            return llr_value
        if ranker is Ranker.CHI_SQUARE:
            try:
                return chi_square(tbl)
            except Undefined:
                return 0.0

        z_crf, z_pmi, z_llr = cfg.rank_weights
        pmi_norm = min(max(pmi_value, 0.0), cfg.pmi_cap) / cfg.pmi_cap
        llr_norm = llr_value / (llr_value + cfg.llr_scale)
        return z_crf * crf + z_pmi * pmi_norm + z_llr * llr_norm

    def rank_query(self, query: Union[Query, str], now: int) -> List[Suggestion]:
        """
        Ranked related queries for one query

        Candidates are its followers with at least min_pair_support weight;
        each is scored from its contingency table by the configured ranker.
        """
        cfg = self.cfg
        stores = self.stores
        a = query.text if isinstance(query, Query) else query
        if stores.query_stats.weight(a, now) <= 0.0:
            return []

        suggestions: List[Suggestion] = []
        for b, w in sorted(stores.cooccurrence.followers(a, now).items()):
            if b == a or w < cfg.min_pair_support:
                continue
            try:
                tbl = build_table(a, b, now, stores, cfg)
            except InsufficientSupport:
                continue
            crf, pmi_value, llr_value = features(tbl)
            suggestions.append(Suggestion(
                query=b,
                score=self._score(tbl, crf, pmi_value, llr_value),
                crf=crf,
                pmi=pmi_value,
                llr=llr_value,
            ))

        suggestions.sort(key=suggestion_sort_key)
        return suggestions[:cfg.top_k]

    def run_ranking_cycle(self, now: int) -> Snapshot:
        """
        Rank every query whose weight clears the rank floor and attach spelling
        corrections; returns the next generation's snapshot
        """
        stats = self.stores.query_stats
        with self.lock:
            weights = sorted(stats.weights(now))
            index = SpellingIndex(weights, self.cfg)
            floor = self.cfg.effective_rank_floor

            entries = {}
            for text, w in weights:
                if w < floor:
                    continue
                suggestions = self.rank_query(text, now)
                spell = index.candidate(text, w)
                if suggestions or spell is not None:
                    entries[text] = SnapshotEntry(
                        query=text,
                        suggestions=suggestions,
                        spell=spell,
                        lang=stats.dominant_lang(text),
                    )

            self.generation += 1
            self.counters.ranking_cycles += 1
            snapshot = Snapshot(
                generation_id=self.generation,
                event_ts=now,
                profile=self.profile,
                entries=entries,
            )

        logger.info(
            f"Ranking cycle {snapshot.generation_id} at {now}: {len(entries)} entries from {len(weights)} queries"
        )
        return snapshot


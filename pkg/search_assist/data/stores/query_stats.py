"""
Query Statistics Store
Raw counts, decayed weights, context presence and language metadata per query
"""
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple

from search_assist.config import EngineConfig
from search_assist.data.stores.decayed import DecayedWeight, DecayModel


@dataclass(slots=True)
class QueryStatsEntry:
    """
    Statistics for one normalized query

    raw_count counts query-hose observations only; weight also receives
    tweet matches; presence counts contexts (sessions or tweets) once each.
    """
    raw_count: int = 0
    weight: DecayedWeight = field(default_factory=DecayedWeight)
    presence: DecayedWeight = field(default_factory=DecayedWeight)
    lang_counts: Counter = field(default_factory=Counter)


class QueryStatsStore:
    """Per-query statistics keyed by normalized query text"""

    def __init__(self, cfg: EngineConfig, decay: DecayModel):
        self.cfg = cfg
        self.decay = decay
        self.entries: Dict[str, QueryStatsEntry] = {}
        self._version = 0
        self._mass_cache: Optional[Tuple[int, int, float]] = None

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, query: str) -> bool:
        return query in self.entries

    def _entry(self, query: str, now: int) -> QueryStatsEntry:
        entry = self.entries.get(query)
        if entry is None:
            entry = QueryStatsEntry(
                weight=self.decay.new(0.0, now),
                presence=self.decay.new(0.0, now),
            )
            self.entries[query] = entry
        return entry

    def update(
        self,
        query: str,
        increment: float,
        lang: str,
        now: int,
        new_context: bool = False,
        count_raw: bool = True
    ) -> None:
        """
        Decay the query's weight to `now` and add `increment`

        Args:
            new_context: first time the query is seen in this session/tweet;
                adds `increment` to its presence as well
            count_raw: False for tweet matches, which never raise raw_count
        """
        entry = self._entry(query, now)
        self.decay.add(entry.weight, increment, now)
        if new_context:
            self.decay.add(entry.presence, increment, now)
        if count_raw:
            entry.raw_count += 1
            entry.lang_counts[lang] += 1
        self._version += 1

    def weight(self, query: str, now: int) -> float:
        entry = self.entries.get(query)
        return 0.0 if entry is None else self.decay.read(entry.weight, now)

    def presence(self, query: str, now: int) -> float:
        entry = self.entries.get(query)
        return 0.0 if entry is None else self.decay.read(entry.presence, now)

    def raw_count(self, query: str) -> int:
        entry = self.entries.get(query)
        return 0 if entry is None else entry.raw_count

    def is_query_like(self, query: str) -> bool:
        return self.raw_count(query) >= self.cfg.querylike_min_count

    def dominant_lang(self, query: str) -> Optional[str]:
        entry = self.entries.get(query)
        if entry is None or not entry.lang_counts:
            return None
        return min(entry.lang_counts.items(), key=lambda kv: (-kv[1], kv[0]))[0]

    def presence_mass(self, now: int) -> float:
        """Total presence weight, cached until the next mutation"""
        cached = self._mass_cache
        if cached is not None and cached[0] == self._version and cached[1] == now:
            return cached[2]
        mass = sum(self.decay.read(entry.presence, now) for entry in self.entries.values())
        self._mass_cache = (self._version, now, mass)
        return mass

    def weights(self, now: int) -> Iterator[Tuple[str, float]]:
        for query, entry in self.entries.items():
            yield query, self.decay.read(entry.weight, now)

    def prune(self, now: int) -> List[str]:
        """Materialize decay and drop queries whose weight fell below prune_threshold"""
        threshold = self.cfg.prune_threshold
        removed: List[str] = []
        for query, entry in self.entries.items():
            self.decay.materialize(entry.presence, now)
            if self.decay.materialize(entry.weight, now) < threshold:
                removed.append(query)
        for query in removed:
            del self.entries[query]
        self._version += 1
        return removed

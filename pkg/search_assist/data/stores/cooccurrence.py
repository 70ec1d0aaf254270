"""
Query Cooccurrence Statistics Store
Sparse directional pair weights with follower / predecessor adjacency
"""
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Set, Tuple

from search_assist.config import EngineConfig
from search_assist.data.stores.decayed import DecayedWeight, DecayModel
from search_assist.exceptions import SelfPair


@dataclass(slots=True)
class CoocEntry:
    """Weight of "next followed prev"; from_session is False for tweet-only pairs"""
    weight: DecayedWeight = field(default_factory=DecayedWeight)
    from_session: bool = False


class CooccurrenceStore:
    """
    Directional cooccurrence weights

    Adjacency invariant: b in followers[a] iff a in predecessors[b] iff (a, b)
    is a stored pair.
    """

    def __init__(self, cfg: EngineConfig, decay: DecayModel):
        self.cfg = cfg
        self.decay = decay
        self.pairs: Dict[Tuple[str, str], CoocEntry] = {}
        self._followers: Dict[str, Set[str]] = {}
        self._predecessors: Dict[str, Set[str]] = {}

    def __len__(self) -> int:
        return len(self.pairs)

    def __contains__(self, pair: Tuple[str, str]) -> bool:
        return pair in self.pairs

    def update(self, prev: str, next_: str, increment: float, now: int, from_session: bool = True) -> None:
        """
        Decay the pair prev -> next_ to `now` and add `increment`

        Raises:
            SelfPair: if prev == next_
        """
        if prev == next_:
            raise SelfPair(f"self pair {prev!r}")
        key = (prev, next_)
        entry = self.pairs.get(key)
        if entry is None:
            entry = CoocEntry(weight=self.decay.new(increment, now), from_session=from_session)
            self.pairs[key] = entry
            self._followers.setdefault(prev, set()).add(next_)
            self._predecessors.setdefault(next_, set()).add(prev)
            return
        self.decay.add(entry.weight, increment, now)
        if from_session:
            entry.from_session = True

    def weight(self, prev: str, next_: str, now: int) -> float:
        entry = self.pairs.get((prev, next_))
        return 0.0 if entry is None else self.decay.read(entry.weight, now)

    def followers(self, query: str, now: int) -> Dict[str, float]:
        """Queries that followed `query` in at least one context, with decayed weights"""
        return {
            nxt: self.decay.read(self.pairs[(query, nxt)].weight, now)
            for nxt in self._followers.get(query, ())
        }

    def predecessors(self, query: str, now: int) -> Dict[str, float]:
        return {
            prev: self.decay.read(self.pairs[(prev, query)].weight, now)
            for prev in self._predecessors.get(query, ())
        }

    def _remove(self, prev: str, next_: str) -> None:
        del self.pairs[(prev, next_)]
        followers = self._followers[prev]
        followers.discard(next_)
        if not followers:
            del self._followers[prev]
        predecessors = self._predecessors[next_]
        predecessors.discard(prev)
        if not predecessors:
            del self._predecessors[next_]

    def prune(
        self,
        now: int,
        drop: Optional[Callable[[str, str, CoocEntry], bool]] = None
    ) -> int:
        """
        Materialize decay and drop pairs below prune_threshold

        Args:
            drop: extra policy; pairs for which it returns True are removed
                regardless of weight
        """
        threshold = self.cfg.prune_threshold
        doomed = []
        for (prev, next_), entry in self.pairs.items():
            value = self.decay.materialize(entry.weight, now)
            if value < threshold or (drop is not None and drop(prev, next_, entry)):
                doomed.append((prev, next_))
        for prev, next_ in doomed:
            self._remove(prev, next_)
        return len(doomed)

    def check_adjacency(self) -> bool:
        """True when both adjacency indexes agree with the pair map"""
        forward = {(a, b) for a, bs in self._followers.items() for b in bs}
        backward = {(a, b) for b, as_ in self._predecessors.items() for a in as_}
        return forward == backward == set(self.pairs)

"""
Spelling Correction

Positional-cost Damerau-Levenshtein (optimal string alignment) distance and
selection of a more popular, nearby query as the correction:
- Substitutions at the first/last character cost more than internal ones
- Hashtags, mentions and plain queries are only compared within their class
- Candidates are bucketed by sigil and length, which is exact because the
  distance is at least the length difference times the cheapest indel
"""
import heapq
from collections import defaultdict
from typing import TYPE_CHECKING, Dict, Iterable, List, Optional, Tuple, Union

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, model_validator

from search_assist.api.schemas.events import Query, Sigil, detect_sigil
from search_assist.api.schemas.suggest import SpellCorrection
from search_assist.config import EngineConfig
from search_assist.exceptions import SigilMismatch

if TYPE_CHECKING:
    from search_assist.data.stores import SearchAssistStores


EPSILON = 1e-6


class EditCosts(BaseModel):
    """Operation costs of the weighted edit distance"""
    model_config = ConfigDict(frozen=True)

    internal_sub: float = Field(default=1.0, gt=0.0)
    boundary_sub: float = Field(default=1.5, gt=0.0)
    insert: float = Field(default=1.0, gt=0.0)
    delete: float = Field(default=1.0, gt=0.0)
    transpose: float = Field(default=1.0, gt=0.0)

    @model_validator(mode="after")
    def check_boundary(self) -> "EditCosts":
        if self.boundary_sub < self.internal_sub:
            raise ValueError("boundary_sub must be >= internal_sub")
        return self

    @classmethod
    def from_config(cls, cfg: EngineConfig) -> "EditCosts":
        return cls(
            internal_sub=cfg.internal_sub,
            boundary_sub=cfg.boundary_sub,
            insert=cfg.insert_cost,
            delete=cfg.delete_cost,
            transpose=cfg.transpose_cost,
        )


QueryLike = Union[Query, str]


def _split_sigil(q: QueryLike) -> Tuple[Sigil, str]:
    text = q.text if isinstance(q, Query) else q
    sigil = detect_sigil(text)
    return sigil, (text[1:] if sigil is not Sigil.NONE else text)


def _osa(s: str, t: str, costs: EditCosts) -> float:
    """Optimal string alignment DP; boundary positions are those of `s`"""
    n, m = len(s), len(t)
    ins, dele, trans = costs.insert, costs.delete, costs.transpose
    before: Optional[List[float]] = None
    prev = [j * ins for j in range(m + 1)]
    for i in range(1, n + 1):
        si = s[i - 1]
        sub = costs.boundary_sub if i == 1 or i == n else costs.internal_sub
        cur = [i * dele] + [0.0] * m
        for j in range(1, m + 1):
            tj = t[j - 1]
            best = prev[j - 1] if si == tj else prev[j - 1] + sub
            if prev[j] + dele < best:
                best = prev[j] + dele
            if cur[j - 1] + ins < best:
                best = cur[j - 1] + ins
            if i > 1 and j > 1 and si == t[j - 2] and s[i - 2] == tj and before[j - 2] + trans < best:
                best = before[j - 2] + trans
            cur[j] = best
        before, prev = prev, cur
    return prev[m]


def weighted_edit_distance(a: QueryLike, b: QueryLike, costs: Optional[EditCosts] = None) -> float:
    """
    Positional-cost edit distance between two queries

    Sigils are stripped first. The pair is put in canonical order (shorter
    string first, then lexicographic) so the result is symmetric; boundary
    substitution cost applies at the first and last character of the shorter
    string.

    Raises:
        SigilMismatch: if the queries belong to different sigil classes
    """
    costs = costs or EditCosts()
    sigil_a, sa = _split_sigil(a)
    sigil_b, sb = _split_sigil(b)
    if sigil_a is not sigil_b:
        raise SigilMismatch(f"cannot compare {sigil_a.value} query with {sigil_b.value} query")
    if sa == sb:
        return 0.0
    if (len(sb), sb) < (len(sa), sa):
        sa, sb = sb, sa
    return _osa(sa, sb, costs)


class SpellingIndex:
    """
    Known queries bucketed by (sigil, stripped length), heaviest first

    Built once per ranking cycle (or per pairwise job) and queried for every
    source query.
    """

    def __init__(self, weights: Iterable[Tuple[QueryLike, float]], cfg: EngineConfig):
        self.cfg = cfg
        self.costs = EditCosts.from_config(cfg)
        self.weights: Dict[str, float] = {}
        for q, w in weights:
            self.weights[q.text if isinstance(q, Query) else q] = w

        buckets: Dict[Tuple[Sigil, int], List[Tuple[float, str]]] = defaultdict(list)
        for text, w in self.weights.items():
            sigil, stripped = _split_sigil(text)
            buckets[(sigil, len(stripped))].append((-w, text))
        for bucket in buckets.values():
            bucket.sort()
        self.buckets = dict(buckets)
        # each unit of length difference costs at least one insert or delete
        self.length_span = cfg.spell_distance_max / min(self.costs.insert, self.costs.delete) + 1e-9

    def __len__(self) -> int:
        return len(self.weights)

    def candidate(self, query: QueryLike, weight: Optional[float] = None) -> Optional[SpellCorrection]:
        """
        Heaviest known query within spell_distance_max whose weight is at least
        spell_ratio_min times this query's; ties by smaller distance, then text
        """
        cfg = self.cfg
        text = query.text if isinstance(query, Query) else query
        own = self.weights.get(text, 0.0) if weight is None else weight
        denominator = max(own, EPSILON)
        sigil, stripped = _split_sigil(text)

        lists = [
            bucket
            for (bucket_sigil, length), bucket in self.buckets.items()
            if bucket_sigil is sigil and abs(length - len(stripped)) <= self.length_span
        ]

        best: Optional[Tuple[float, float, str]] = None
        for neg_weight, other in heapq.merge(*lists):
            w = -neg_weight
            ratio = w / denominator
            if ratio < cfg.spell_ratio_min:
                break
            if best is not None and w < best[0]:
                break
            if other == text:
                continue
            distance = weighted_edit_distance(text, other, self.costs)
            if distance > cfg.spell_distance_max:
                continue
            if best is None or (distance, other) < (best[1], best[2]):
                best = (w, distance, other)

        if best is None:
            return None
        w, distance, other = best
        return SpellCorrection(query=other, distance=distance, ratio=w / denominator)


def spelling_candidate(
    query: QueryLike,
    now: int,
    stores: "SearchAssistStores",
    cfg: EngineConfig
) -> Optional[SpellCorrection]:
    """Correction for one query against the current query statistics store"""
    index = SpellingIndex(stores.query_stats.weights(now), cfg)
    return index.candidate(query)


def background_pairwise_job(
    queries: List[Tuple[QueryLike, float]],
    cfg: EngineConfig
) -> Dict[str, SpellCorrection]:
    """
    Corrections for every query of a long-horizon query list

    Returns:
        Map from query text to its correction; queries without one are absent
    """
    index = SpellingIndex(queries, cfg)
    table: Dict[str, SpellCorrection] = {}
    for text, w in index.weights.items():
        correction = index.candidate(text, w)
        if correction is not None:
            table[text] = correction
    logger.info(f"Pairwise spelling job: {len(table)} corrections over {len(index)} queries")
    return table

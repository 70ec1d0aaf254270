"""
Query Churn Analytics
Exact per-interval top-k terms, churn between consecutive intervals, and
normalized query frequency time series, emitted as CSV tables
"""
from collections import Counter
from itertools import groupby
from pathlib import Path
from typing import Iterable, List, Literal, Optional, Set, Tuple, Union

import pandas as pd
from loguru import logger
from pydantic import BaseModel, Field

from search_assist.api.schemas.events import QueryEvent
from search_assist.exceptions import KMismatch

Granularity = Literal["term", "query"]


class IntervalTopK(BaseModel):
    """Top-k terms of one tumbling interval, counts non-increasing, ties by term"""
    interval_start: int
    interval_len: int = Field(..., gt=0)
    k: int = Field(..., ge=1)
    entries: List[Tuple[str, int]] = Field(default_factory=list)

    @property
    def terms(self) -> Set[str]:
        return {term for term, _ in self.entries}


def interval_start(ts: int, interval_len: int) -> int:
    """Epoch-aligned start of the tumbling interval holding ts"""
    return ts - ts % interval_len


def _units(event: QueryEvent, granularity: Granularity) -> List[str]:
    if granularity == "query":
        return [event.query.text]
    return event.query.text.split()


def topk_per_interval(
    events: Iterable[QueryEvent],
    k: int,
    interval_len: int,
    granularity: Granularity = "term",
    dedupe_session: bool = False
) -> List[IntervalTopK]:
    """
    Exact top-k per non-empty tumbling interval

    Args:
        events: Query events ordered by ts
        k: Entries kept per interval
        interval_len: Interval length in ms
        granularity: "term" counts whitespace tokens, "query" whole queries
        dedupe_session: Count a unit at most once per session per interval

    Returns:
        One IntervalTopK per interval that saw at least one unit
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if interval_len <= 0:
        raise ValueError(f"interval_len must be positive, got {interval_len}")

    results: List[IntervalTopK] = []
    for start, group in groupby(events, key=lambda e: interval_start(e.ts, interval_len)):
        counts: Counter = Counter()
        seen: Set[Tuple[str, str]] = set()
        for event in group:
            for unit in _units(event, granularity):
                if dedupe_session:
                    if (event.session_id, unit) in seen:
                        continue
                    seen.add((event.session_id, unit))
                counts[unit] += 1
        if not counts:
            continue
        ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))[:k]
        results.append(IntervalTopK(interval_start=start, interval_len=interval_len, k=k, entries=ranked))

    logger.debug(f"Counted top-{k} over {len(results)} intervals of {interval_len} ms")
    return results


def churn_rate(a: IntervalTopK, b: IntervalTopK) -> float:
    """Fraction of a's top-k slots whose terms are gone from b's top-k"""
    if a.k != b.k:
        raise KMismatch(f"cannot compare top-{a.k} with top-{b.k}")
    return 1.0 - len(a.terms & b.terms) / a.k


def churn_series(intervals: List[IntervalTopK]) -> pd.DataFrame:
    """
    Churn between each pair of consecutive intervals

    Returns:
        DataFrame with columns interval_start (of the earlier interval), churn
    """
    rows = [
        {"interval_start": a.interval_start, "churn": churn_rate(a, b)}
        for a, b in zip(intervals, intervals[1:])
    ]
    return pd.DataFrame(rows, columns=["interval_start", "churn"])


def frequency_timeseries(
    events: Iterable[QueryEvent],
    queries: Optional[Iterable[str]],
    interval_len: int
) -> pd.DataFrame:
    """
    Per-interval frequency of each query, normalized by all query events of the interval

    Args:
        events: Query events
        queries: Normalized queries to report; None reports every observed query
        interval_len: Interval length in ms

    Returns:
        DataFrame with columns interval_start, query, freq; a query absent
        from a non-empty interval gets a 0.0 row
    """
    if interval_len <= 0:
        raise ValueError(f"interval_len must be positive, got {interval_len}")

    frame = pd.DataFrame(
        [(interval_start(e.ts, interval_len), e.query.text) for e in events],
        columns=["interval_start", "query"],
    )
    if frame.empty:
        return pd.DataFrame(columns=["interval_start", "query", "freq"])

    totals = frame.groupby("interval_start").size()
    wanted = sorted(set(queries)) if queries is not None else sorted(frame["query"].unique())

    counts = (
        frame[frame["query"].isin(wanted)]
        .groupby(["interval_start", "query"])
        .size()
        .reindex(pd.MultiIndex.from_product([totals.index, wanted], names=["interval_start", "query"]), fill_value=0)
    )
    freq = counts.div(totals, level="interval_start").rename("freq")
    return freq.reset_index()[["interval_start", "query", "freq"]]


def write_csv(table: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(path, index=False)
    logger.info(f"Wrote {len(table)} rows to {path}")
    return path

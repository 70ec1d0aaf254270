"""
Hose Reader
Parses the query hose and the firehose from newline-delimited JSON files
and merges them into one event-time-ordered stream
"""
import gzip
import heapq
from pathlib import Path
from typing import IO, Callable, Dict, Iterable, Iterator, List, Optional, Tuple, TypeVar, Union

import orjson
from loguru import logger
from pydantic import ValidationError

from search_assist.api.schemas.events import (
    QueryEvent,
    QuerySource,
    TweetEvent,
    normalize_query,
)
from search_assist.exceptions import EmptyQuery, OutOfOrderInput, ParseError


E = TypeVar("E", QueryEvent, TweetEvent)

_SOURCES: Dict[str, QuerySource] = {s.value: s for s in QuerySource}


def _load_record(line: str, line_no: int) -> Dict:
    try:
        record = orjson.loads(line)
    except orjson.JSONDecodeError as e:
        raise ParseError(line_no, "<record>", f"invalid JSON: {e}") from e
    if not isinstance(record, dict):
        raise ParseError(line_no, "<record>", "record is not an object")
    return record


def _required(record: Dict, field: str, line_no: int):
    value = record.get(field)
    if value is None or (isinstance(value, str) and not value.strip()):
        raise ParseError(line_no, field, "missing or empty")
    return value


def _timestamp(record: Dict, line_no: int) -> int:
    ts = _required(record, "ts", line_no)
    if isinstance(ts, bool) or not isinstance(ts, int):
        raise ParseError(line_no, "ts", f"expected integer milliseconds, got {ts!r}")
    if ts <= 0:
        raise ParseError(line_no, "ts", "must be positive")
    return ts


def _validation_field(e: ValidationError) -> str:
    loc = e.errors()[0].get("loc", ()) if e.errors() else ()
    return str(loc[0]) if loc else "<record>"


def parse_query_event(line: str, line_no: int = 0) -> QueryEvent:
    """
    Parse one query hose record

    Format: {"sid": ..., "q": ..., "src": ..., "lang": ..., "ts": ...}

    Raises:
        ParseError: naming the offending field
    """
    record = _load_record(line, line_no)
    session_id = _required(record, "sid", line_no)
    raw_query = _required(record, "q", line_no)
    source_name = _required(record, "src", line_no)
    ts = _timestamp(record, line_no)

    source = _SOURCES.get(str(source_name).strip().lower())
    if source is None:
        raise ParseError(line_no, "src", f"unknown source {source_name!r}")
    try:
        query = normalize_query(str(raw_query))
    except EmptyQuery as e:
        raise ParseError(line_no, "q", str(e)) from e

    try:
        return QueryEvent(
            session_id=str(session_id),
            query=query,
            source=source,
            lang=record.get("lang") or "und",
            ts=ts,
        )
    except ValidationError as e:
        raise ParseError(line_no, _validation_field(e), str(e.errors()[0]["msg"])) from e


def parse_tweet_event(line: str, line_no: int = 0) -> TweetEvent:
    """
    Parse one firehose record

    Format: {"tid": ..., "text": ..., "lang": ..., "ts": ...}
    """
    record = _load_record(line, line_no)
    tweet_id = _required(record, "tid", line_no)
    text = _required(record, "text", line_no)
    ts = _timestamp(record, line_no)

    try:
        return TweetEvent(tweet_id=str(tweet_id), text=str(text), lang=record.get("lang") or "und", ts=ts)
    except ValidationError as e:
        raise ParseError(line_no, _validation_field(e), str(e.errors()[0]["msg"])) from e


def open_hose(path: Union[str, Path]) -> IO[str]:
    """Open a hose file as UTF-8 text, transparently gunzipping *.gz"""
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, "rt", encoding="utf-8")
    return open(path, "r", encoding="utf-8")


class HoseReader(Iterable[E]):
    """
    Iterates parsed events from a hose file

    Malformed lines are logged, counted in `skipped` and skipped; they never
    stop the stream.
    """

    def __init__(self, path: Union[str, Path], parser: Callable[[str, int], E]):
        self.path = Path(path)
        self.parser = parser
        self.skipped = 0
        self.errors: List[ParseError] = []

    def __iter__(self) -> Iterator[E]:
        with open_hose(self.path) as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    yield self.parser(line, line_no)
                except ParseError as e:
                    self.skipped += 1
                    if len(self.errors) < 100:
                        self.errors.append(e)
                    logger.debug(f"{self.path.name}: skipping {e}")
        if self.skipped:
            logger.warning(f"{self.path.name}: skipped {self.skipped} malformed lines")


def query_hose(path: Union[str, Path]) -> HoseReader[QueryEvent]:
    return HoseReader(path, parse_query_event)


def firehose(path: Union[str, Path]) -> HoseReader[TweetEvent]:
    return HoseReader(path, parse_tweet_event)


def _ordered(events: Iterable[E], stream: str, tolerance_ms: int) -> Iterator[E]:
    """
    Enforce non-decreasing event time on one stream

    With a positive tolerance, events up to `tolerance_ms` late are held back
    and re-emitted in order (stable for equal timestamps).
    """
    if tolerance_ms <= 0:
        previous: Optional[int] = None
        for event in events:
            if previous is not None and event.ts < previous:
                raise OutOfOrderInput(stream, event.ts, previous)
            previous = event.ts
            yield event
        return

    pending: List[Tuple[int, int, E]] = []
    high_water: Optional[int] = None
    emitted: Optional[int] = None
    for seq, event in enumerate(events):
        if high_water is not None and event.ts < high_water - tolerance_ms:
            raise OutOfOrderInput(stream, event.ts, high_water)
        if emitted is not None and event.ts < emitted:
            raise OutOfOrderInput(stream, event.ts, emitted)
        heapq.heappush(pending, (event.ts, seq, event))
        high_water = event.ts if high_water is None else max(high_water, event.ts)
        while pending and pending[0][0] <= high_water - tolerance_ms:
            emitted, _, ready = heapq.heappop(pending)
            yield ready
    while pending:
        _, _, ready = heapq.heappop(pending)
        yield ready


def merge_streams(
    queries: Iterable[QueryEvent],
    tweets: Iterable[TweetEvent],
    tolerance_ms: int = 0
) -> Iterator[Union[QueryEvent, TweetEvent]]:
    """
    Merge both hoses into one stream ordered by event time

    Ties go to the query stream, then to input order. Lazy: OutOfOrderInput
    surfaces while iterating.
    """
    # heapq.merge breaks key ties by argument position, which gives query-before-tweet
    return heapq.merge(
        _ordered(queries, "query", tolerance_ms),
        _ordered(tweets, "tweet", tolerance_ms),
        key=lambda event: event.ts,
    )

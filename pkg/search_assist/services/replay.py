"""
Replay Driver
Feeds a merged event stream into the engine, paced by a replay clock, and
fires decay/prune and ranking cycles on event-time boundaries
"""
import math
import time
from typing import Callable, Iterable, Optional, Union

from loguru import logger
from pydantic import BaseModel

from search_assist.api.schemas.events import QueryEvent, TweetEvent
from search_assist.api.schemas.suggest import Snapshot
from search_assist.services.engine import SearchAssistEngine

Event = Union[QueryEvent, TweetEvent]
Sink = Callable[[Event], None]
Publisher = Callable[[Snapshot], None]


class ReplayClock:
    """
    Maps event time onto wall time

    With speedup=inf (the default) events are delivered as fast as possible;
    otherwise an event at ts is due at start_wall + (ts - start_event) / speedup.
    """

    def __init__(
        self,
        start_event_ts: Optional[int] = None,
        start_wall_ts: Optional[float] = None,
        speedup: float = math.inf
    ):
        if speedup <= 0:
            raise ValueError(f"speedup must be positive, got {speedup}")
        self.start_event_ts = start_event_ts
        self.start_wall_ts = start_wall_ts
        self.speedup = speedup
        self._now = start_event_ts or 0

    @property
    def paced(self) -> bool:
        return math.isfinite(self.speedup)

    def now(self) -> int:
        """Current event time; never moves backwards"""
        return self._now

    def advance(self, ts: int) -> None:
        if self.start_event_ts is None:
            self.start_event_ts = ts
        self._now = max(self._now, ts)

    def wait_until(self, ts: int) -> None:
        """Block until `ts` is due in wall time (no-op when unpaced)"""
        if not self.paced:
            return
        if self.start_wall_ts is None:
            self.start_wall_ts = time.monotonic()
        if self.start_event_ts is None:
            self.start_event_ts = ts
        due = self.start_wall_ts + (ts - self.start_event_ts) / 1000.0 / self.speedup
        delay = due - time.monotonic()
        if delay > 0:
            time.sleep(delay)


class ReplayReport(BaseModel):
    """Summary of one replay run"""
    delivered: int = 0
    queries: int = 0
    tweets: int = 0
    sink_errors: int = 0
    skipped_lines: int = 0
    decay_cycles: int = 0
    ranking_cycles: int = 0
    snapshots: int = 0
    wall_duration_ms: float = 0.0
    first_ts: Optional[int] = None
    last_ts: Optional[int] = None


class CycleSchedule:
    """
    Event-time boundaries for the two periodic cycles

    Both are anchored at the first delivered event: the first cycle of each
    kind is due one interval after it.
    """

    def __init__(self, engine: SearchAssistEngine, publish: Optional[Publisher], report: ReplayReport):
        self.engine = engine
        self.publish = publish
        self.report = report
        self.next_decay: Optional[int] = None
        self.next_ranking: Optional[int] = None

    def start(self, first_ts: int) -> None:
        cfg = self.engine.cfg
        self.next_decay = first_ts + cfg.decay_cycle_interval_ms
        self.next_ranking = first_ts + cfg.snapshot_interval_ms

    def run_due(self, ts: int) -> None:
        """Run every cycle due at or before `ts`, in boundary order; decay first on ties"""
        cfg = self.engine.cfg
        while self.next_decay <= ts or self.next_ranking <= ts:
            if self.next_decay <= self.next_ranking:
                self.engine.run_decay_prune_cycle(self.next_decay)
                self.report.decay_cycles += 1
                self.next_decay += cfg.decay_cycle_interval_ms
            else:
                self.rank(self.next_ranking)
                self.next_ranking += cfg.snapshot_interval_ms

    def rank(self, now: int) -> Snapshot:
        snapshot = self.engine.run_ranking_cycle(now)
        self.report.ranking_cycles += 1
        if self.publish is not None:
            self.publish(snapshot)
            self.report.snapshots += 1
        return snapshot


def replay(
    events: Iterable[Event],
    engine: SearchAssistEngine,
    clock: Optional[ReplayClock] = None,
    sink: Optional[Sink] = None,
    publish: Optional[Publisher] = None,
    skipped_lines: int = 0,
    flush: bool = False
) -> ReplayReport:
    """
    Deliver every event in order to the sink (the engine by default)

    Cycles fire when event time crosses their boundaries, so the number of
    cycles depends only on the event span. A sink exception is counted and
    logged, and delivery continues.

    Args:
        events: Merged, time-ordered events
        engine: Engine whose cycles are driven
        clock: Replay clock; unpaced if omitted
        sink: Event consumer; defaults to engine.ingest
        publish: Called with each ranking cycle's snapshot
        skipped_lines: Malformed input lines, reported as-is
        flush: Run one final decay and ranking cycle after the last event

    Returns:
        ReplayReport
    """
    clock = clock or ReplayClock()
    sink = sink or engine.ingest
    report = ReplayReport(skipped_lines=skipped_lines)
    schedule = CycleSchedule(engine, publish, report)
    started = time.monotonic()

    for event in events:
        if report.first_ts is None:
            report.first_ts = event.ts
            schedule.start(event.ts)

        clock.wait_until(event.ts)
        schedule.run_due(event.ts)
        clock.advance(event.ts)

        try:
            sink(event)
        except Exception as e:
            report.sink_errors += 1
            logger.error(f"Sink failed on event at {event.ts}: {e}")
        else:
            report.delivered += 1
            if isinstance(event, QueryEvent):
                report.queries += 1
            else:
                report.tweets += 1
        report.last_ts = event.ts

    if flush and report.last_ts is not None:
        final_ts = report.last_ts + 1
        engine.run_decay_prune_cycle(final_ts)
        report.decay_cycles += 1
        schedule.rank(final_ts)

    report.wall_duration_ms = (time.monotonic() - started) * 1000.0
    logger.success(
        f"Replay finished: {report.delivered} events ({report.queries} queries, {report.tweets} tweets), "
        f"{report.ranking_cycles} ranking cycles, {report.sink_errors} sink errors, "
        f"{report.skipped_lines} skipped lines"
    )
    return report

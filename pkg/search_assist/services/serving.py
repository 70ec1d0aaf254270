"""
Serving Cache
Polls snapshot manifests, holds the current snapshots in memory and answers
suggestion lookups by interpolating the realtime and background models
"""
import threading
import time
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field
from tenacity import RetryError, retry, retry_if_exception_type, stop_after_attempt, wait_fixed

from search_assist.api.schemas.events import collapse_whitespace
from search_assist.api.schemas.suggest import (
    Manifest,
    ProfileName,
    Snapshot,
    SnapshotEntry,
    SpellCorrection,
    SuggestResponse,
    Suggestion,
    suggestion_sort_key,
)
from search_assist.data.snapshots.repository import SnapshotRepository
from search_assist.exceptions import InvalidRequest, SnapshotLoadError


class ServingState(BaseModel):
    """Immutable view of what the cache currently serves"""
    model_config = ConfigDict(frozen=True)

    realtime: Optional[Snapshot] = None
    background: Optional[Snapshot] = None
    last_poll_ts: Optional[float] = None
    last_error: Optional[str] = None

    def snapshot(self, profile: ProfileName) -> Optional[Snapshot]:
        return self.realtime if profile is ProfileName.REALTIME else self.background

    @property
    def loaded_generation_ids(self) -> Dict[str, Optional[int]]:
        return {
            profile.value: (snap.generation_id if snap else None)
            for profile, snap in ((ProfileName.REALTIME, self.realtime), (ProfileName.BACKGROUND, self.background))
        }

    @property
    def loaded_event_ts(self) -> Dict[str, Optional[int]]:
        return {
            profile.value: (snap.event_ts if snap else None)
            for profile, snap in ((ProfileName.REALTIME, self.realtime), (ProfileName.BACKGROUND, self.background))
        }

    def lookup(self, query: str) -> Tuple[Optional[SnapshotEntry], Optional[SnapshotEntry]]:
        rt = self.realtime.entries.get(query) if self.realtime else None
        bg = self.background.entries.get(query) if self.background else None
        return rt, bg


class SnapshotCache:
    """
    Holds the current ServingState and swaps it on refresh

    Readers take `cache.state` once per request and never see a partially
    loaded snapshot; refreshes are serialized among themselves.
    """

    def __init__(self, directory: Union[str, Path]):
        self.repository = SnapshotRepository(directory)
        self.state = ServingState()
        self._refresh_lock = threading.Lock()

    @retry(
        stop=stop_after_attempt(3),
        wait=wait_fixed(0.05),
        retry=retry_if_exception_type(OSError),
        reraise=True,
    )
    def _read_manifest(self, profile: ProfileName) -> Optional[Manifest]:
        return self.repository.read_manifest(profile)

    def _load_profile(self, profile: ProfileName, current: Optional[Snapshot]) -> Optional[Snapshot]:
        manifest = self._read_manifest(profile)
        if manifest is None:
            return None
        if current is not None and manifest.generation_id <= current.generation_id:
            return None
        return self.repository.load(manifest, profile)

    def refresh(self) -> bool:
        """
        Load any newer snapshot named by the manifests

        Returns:
            True if at least one profile moved to a newer generation. Errors
            are logged and recorded on the state; the previous snapshots stay live.
        """
        with self._refresh_lock:
            state = self.state
            loaded: Dict[str, Snapshot] = {}
            errors: List[str] = []
            for profile in ProfileName:
                try:
                    snapshot = self._load_profile(profile, state.snapshot(profile))
                except (SnapshotLoadError, OSError, RetryError) as e:
                    errors.append(f"{profile.value}: {e}")
                    logger.warning(f"Refresh of {profile.value} failed, keeping current snapshot: {e}")
                    continue
                if snapshot is not None:
                    loaded[profile.value] = snapshot
                    logger.info(f"Loaded {profile.value} snapshot {snapshot.generation_id} ({len(snapshot.entries)} entries)")

            self.state = ServingState(
                realtime=loaded.get(ProfileName.REALTIME.value, state.realtime),
                background=loaded.get(ProfileName.BACKGROUND.value, state.background),
                last_poll_ts=time.time(),
                last_error="; ".join(errors) if errors else None,
            )
            return bool(loaded)


def interpolate(
    rt: Optional[SnapshotEntry],
    bg: Optional[SnapshotEntry],
    mu: float,
    top_k: int
) -> Tuple[List[Suggestion], Optional[SpellCorrection]]:
    """
    Blend realtime and background suggestions linearly

    A candidate missing from one side contributes 0 from that side. At mu=1
    the background is ignored and at mu=0 the realtime side is, so each
    extreme reproduces one model's ranking. With only one side present its
    list is scaled by that side's weight and keeps its order, even at weight 0.

    Returns:
        (merged suggestions, spelling correction)
    """
    if not 0.0 <= mu <= 1.0:
        raise InvalidRequest(f"mu must be in [0, 1], got {mu}")

    if rt is None or bg is None:
        only, weight = (rt, mu) if bg is None else (bg, 1.0 - mu)
        if only is None:
            return [], None
        scaled = [s.model_copy(update={"score": weight * s.score}) for s in only.suggestions]
        return scaled[:top_k], only.spell

    sides = []
    if mu > 0.0:
        sides.append((mu, rt))
    if mu < 1.0:
        sides.append((1.0 - mu, bg))

    scores: Dict[str, float] = {}
    features: Dict[str, Suggestion] = {}
    for weight, entry in sides:
        for s in entry.suggestions:
            scores[s.query] = scores.get(s.query, 0.0) + weight * s.score
            features.setdefault(s.query, s)

    merged = [
        features[q].model_copy(update={"score": score})
        for q, score in scores.items()
    ]
    merged.sort(key=suggestion_sort_key)

    spell = rt.spell if rt.spell is not None else bg.spell
    return merged[:top_k], spell


def serve_suggestions(q: Optional[str], state: ServingState, mu: float, top_k: int) -> SuggestResponse:
    """
    Answer one suggestion request from a serving state

    Raises:
        InvalidRequest: missing or blank query
    """
    if q is None:
        raise InvalidRequest("query parameter 'q' is required")
    query = collapse_whitespace(q)
    if not query:
        raise InvalidRequest("query parameter 'q' must not be empty", {"q": q})

    rt, bg = state.lookup(query)
    suggestions, spell = interpolate(rt, bg, mu, top_k)
    return SuggestResponse(
        query=query,
        suggestions=suggestions,
        spell=spell,
        generation_ids=state.loaded_generation_ids,
    )

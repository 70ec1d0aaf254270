"""
Suggestion API routes
Related-query lookups and cache health
"""
import time
from typing import Optional

from fastapi import APIRouter, Query, Request
from loguru import logger

from search_assist.api.schemas.suggest import HealthResponse, SuggestResponse
from search_assist.config import settings
from search_assist.services.serving import SnapshotCache, serve_suggestions


router = APIRouter()


@router.get("/suggest", response_model=SuggestResponse)
async def suggest(
    request: Request,
    q: Optional[str] = Query(None, description="Raw query text")
) -> SuggestResponse:
    """
    Related queries and spelling correction for `q`

    Unknown queries return empty suggestions; a missing or blank `q` is a 400.
    """
    cache: SnapshotCache = request.app.state.cache
    response = serve_suggestions(q, cache.state, request.app.state.mu, request.app.state.top_k)
    logger.debug(f"Suggest {response.query!r}: {len(response.suggestions)} suggestions")
    return response


@router.get("/healthz", response_model=HealthResponse)
async def healthz(request: Request) -> HealthResponse:
    """Loaded generations per profile and time since the last poll"""
    state = request.app.state.cache.state
    age = time.time() - state.last_poll_ts if state.last_poll_ts is not None else None
    loaded = any(g is not None for g in state.loaded_generation_ids.values())
    return HealthResponse(
        status="healthy" if loaded and state.last_error is None else "degraded",
        version=settings.app_version,
        generation_ids=state.loaded_generation_ids,
        event_ts=state.loaded_event_ts,
        last_poll_age_seconds=age,
        last_error=state.last_error,
    )

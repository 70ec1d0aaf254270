"""
Serving application factory
Builds the FastAPI app answering related-query requests from published snapshots
"""
import asyncio
from contextlib import asynccontextmanager
from datetime import datetime
from pathlib import Path
from typing import Optional, Union

from fastapi import FastAPI, Request, status
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.gzip import GZipMiddleware
from fastapi.responses import JSONResponse
from loguru import logger

from search_assist.api.routes import suggest
from search_assist.api.schemas.suggest import ErrorResponse
from search_assist.config import EngineConfig, settings
from search_assist.exceptions import InvalidRequest
from search_assist.services.serving import SnapshotCache


async def poll_snapshots(cache: SnapshotCache, interval_seconds: float) -> None:
    """Refresh the cache forever; refresh IO runs off the event loop"""
    while True:
        await asyncio.sleep(interval_seconds)
        try:
            await asyncio.to_thread(cache.refresh)
        except Exception as e:
            logger.exception(f"Snapshot poll failed: {str(e)}")


def create_app(
    snapshot_dir: Union[str, Path],
    mu: Optional[float] = None,
    top_k: Optional[int] = None,
    poll_interval_seconds: Optional[float] = None
) -> FastAPI:
    """
    Build the serving application over a snapshot directory

    Args:
        snapshot_dir: Directory holding manifests and snapshot files
        mu: Realtime weight in the interpolation (engine default if omitted)
        top_k: Maximum suggestions per response (engine default if omitted)
        poll_interval_seconds: Manifest poll period; 0 disables the poller
    """
    defaults = EngineConfig()
    mu = mu if mu is not None else (
        settings.interpolation_mu if settings.interpolation_mu is not None else defaults.interpolation_mu
    )
    poll_interval = settings.poll_interval_seconds if poll_interval_seconds is None else poll_interval_seconds

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        """Load whatever is already published, then start polling"""
        logger.info(f"Starting {settings.app_name} v{settings.app_version}")
        logger.info(f"Serving snapshots from {snapshot_dir} (mu={mu}, poll every {poll_interval}s)")

        await asyncio.to_thread(app.state.cache.refresh)
        poller = asyncio.create_task(poll_snapshots(app.state.cache, poll_interval)) if poll_interval > 0 else None

        logger.success("Application started successfully")
        yield

        logger.info("Shutting down application...")
        if poller is not None:
            poller.cancel()
            try:
                await poller
            except asyncio.CancelledError:
                pass
        logger.success("Application shutdown complete")

    app = FastAPI(
        title=settings.app_name,
        description="Real-time related query suggestions and spelling correction",
        version=settings.app_version,
        docs_url="/docs" if settings.debug else None,
        redoc_url="/redoc" if settings.debug else None,
        lifespan=lifespan
    )
    app.state.cache = SnapshotCache(snapshot_dir)
    app.state.mu = mu
    app.state.top_k = top_k if top_k is not None else defaults.top_k

    app.add_middleware(GZipMiddleware, minimum_size=1000)

    @app.exception_handler(InvalidRequest)
    async def invalid_request_handler(request: Request, exc: InvalidRequest):
        """Handle malformed suggestion requests"""
        logger.warning(f"Invalid request: {exc.message}")
        return JSONResponse(
            status_code=status.HTTP_400_BAD_REQUEST,
            content=ErrorResponse(
                error="InvalidRequest",
                message=exc.message,
                details=exc.details,
                timestamp=datetime.utcnow()
            ).model_dump(mode="json")
        )

    @app.exception_handler(RequestValidationError)
    async def validation_exception_handler(request: Request, exc: RequestValidationError):
        """Handle validation errors"""
        logger.error(f"Validation error: {exc.errors()}")
        return JSONResponse(
            status_code=status.HTTP_400_BAD_REQUEST,
            content=ErrorResponse(
                error="ValidationError",
                message="Invalid request data",
                details={"errors": [str(e) for e in exc.errors()]},
                timestamp=datetime.utcnow()
            ).model_dump(mode="json")
        )

    @app.exception_handler(Exception)
    async def general_exception_handler(request: Request, exc: Exception):
        """Handle general exceptions"""
        logger.exception(f"Unhandled exception: {str(exc)}")
        return JSONResponse(
            status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
            content=ErrorResponse(
                error="InternalServerError",
                message="An unexpected error occurred",
                details={"exception": str(exc)} if settings.debug else None,
                timestamp=datetime.utcnow()
            ).model_dump(mode="json")
        )

    @app.get("/", tags=["Root"])
    async def root():
        """Root endpoint with API information"""
        return {
            "name": settings.app_name,
            "version": settings.app_version,
            "suggest": "/suggest?q=",
            "health": "/healthz",
        }

    app.include_router(suggest.router, tags=["Suggestions"])
    return app

"""
Search Assistance Engine - Serving API
Module-level application for `uvicorn search_assist.api.main:app`, configured
from environment settings
"""
from loguru import logger

from search_assist.api.app import create_app
from search_assist.config import settings
from search_assist.services.logging import configure_logging


configure_logging(settings.log_level, settings.log_format)

app = create_app(settings.snapshot_dir)


if __name__ == "__main__":
    import uvicorn

    logger.info(f"Starting server on {settings.host}:{settings.port}")
    uvicorn.run(
        "search_assist.api.main:app",
        host=settings.host,
        port=settings.port,
        reload=settings.debug,
        log_level=settings.log_level.lower()
    )

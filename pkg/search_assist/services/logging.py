"""
Logging setup
Configures the loguru sink used by the CLI and the serving API
"""
import sys

from loguru import logger


TEXT_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | "
    "<cyan>{name}</cyan>:<cyan>{function}</cyan> | <level>{message}</level>"
)


def configure_logging(level: str = "INFO", fmt: str = "text") -> None:
    """
    Replace loguru's default sink with a single stderr sink

    Args:
        level: Minimum level name
        fmt: "text" for the colourised line format, "json" for serialized records
    """
    logger.remove()
    if fmt.lower() == "json":
        logger.add(sys.stderr, level=level.upper(), serialize=True)
    else:
        logger.add(sys.stderr, level=level.upper(), format=TEXT_FORMAT)

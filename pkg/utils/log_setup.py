"""Logging configuration for the command line."""
import logging
import sys

from config.settings import LOG_FORMAT, LOG_LEVEL

_handler: logging.Handler | None = None


def setup_logging(level: str | int | None = None):
    """Route log records to stderr through one stream handler; repeated calls replace it."""
    global _handler
    level = level if level is not None else LOG_LEVEL
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = logging.WARNING
    root = logging.getLogger()
    if _handler is not None:
        root.removeHandler(_handler)
    _handler = logging.StreamHandler(sys.stderr)
    _handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(_handler)
    root.setLevel(level)

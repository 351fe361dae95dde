"""
Package logging setup.

Library modules only call `logging.getLogger(__name__)`. The CLI calls
`configure_logging` once per run; it owns the single stream handler on the
package logger and picks level and format from `--debug`.
"""

from __future__ import annotations

import logging

__all__ = ["PACKAGE_LOGGER", "INFO_FORMAT", "DEBUG_FORMAT", "configure_logging", "get_logger"]

PACKAGE_LOGGER = "fri_forge"
INFO_FORMAT = "%(levelname)s %(name)s: %(message)s"
# worker processes log too, so debug lines carry the pid
DEBUG_FORMAT = "%(asctime)s %(levelname)s %(name)s [pid %(process)d]: %(message)s"

_handler: logging.Handler | None = None


def get_logger(name: str = PACKAGE_LOGGER) -> logging.Logger:
    return logging.getLogger(name)


def configure_logging(debug: bool = False) -> logging.Logger:
    """Install (once) or update the package stream handler; returns the package logger."""
    global _handler
    logger = logging.getLogger(PACKAGE_LOGGER)
    if _handler is None or _handler not in logger.handlers:
        _handler = logging.StreamHandler()
        logger.addHandler(_handler)
    level = logging.DEBUG if debug else logging.INFO
    _handler.setFormatter(logging.Formatter(DEBUG_FORMAT if debug else INFO_FORMAT))
    _handler.setLevel(level)
    logger.setLevel(level)
    return logger

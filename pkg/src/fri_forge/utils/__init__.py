"""
fri_forge.utils

Small helpers shared across the package.

Re-exports:
    - configure_logging(debug: bool = False) -> logging.Logger
    - get_logger(name: str = "fri_forge") -> logging.Logger
"""

from __future__ import annotations

from .logging import configure_logging, get_logger

__all__ = ["configure_logging", "get_logger"]

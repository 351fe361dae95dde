# src/fri_forge/config.py
from __future__ import annotations

import json
import logging
import os
from collections.abc import Mapping
from pathlib import Path
from typing import Any

from .errors import ConfigError
from .io.exports import write_json

__all__ = [
    "THREADS_ENV",
    "RESOLVED_CONFIG_NAME",
    "load_json_config",
    "apply_overrides",
    "write_resolved_config",
    "read_resolved_config",
    "resolve_threads",
]

log = logging.getLogger(__name__)

THREADS_ENV = "FRI_FORGE_THREADS"
RESOLVED_CONFIG_NAME = "config.json"


def load_json_config(path: Path | None) -> dict[str, Any]:
    """Read a JSON object from `path`; `None` means an empty config."""
    if path is None:
        return {}
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"malformed JSON in {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object, got {type(data).__name__}")
    return data


def apply_overrides(mapping: Mapping[str, Any], **flags: Any) -> dict[str, Any]:
    """Copy of `mapping` with every non-None flag value written over it."""
    out = dict(mapping)
    for key, value in flags.items():
        if value is not None:
            out[key] = value
    return out


def write_resolved_config(run_dir: Path, mapping: Mapping[str, Any]) -> Path:
    path = run_dir / RESOLVED_CONFIG_NAME
    write_json(dict(mapping), path)
    log.debug("resolved config written to %s", path)
    return path


def read_resolved_config(run_dir: Path) -> dict[str, Any]:
    path = run_dir / RESOLVED_CONFIG_NAME
    if not path.exists():
        raise ConfigError(f"{run_dir} is not a run directory (no {RESOLVED_CONFIG_NAME})")
    return load_json_config(path)


def resolve_threads(flag: int | None) -> int:
    """`--threads` first, then $FRI_FORGE_THREADS, then 1."""
    if flag is not None:
        value: Any = flag
        source = "--threads"
    else:
        value = os.environ.get(THREADS_ENV)
        source = THREADS_ENV
        if value is None or value == "":
            return 1
    try:
        n = int(value)
    except ValueError as e:
        raise ConfigError(f"{source} must be an integer, got {value!r}") from e
    if n < 1:
        raise ConfigError(f"{source} must be >= 1, got {n}")
    return n

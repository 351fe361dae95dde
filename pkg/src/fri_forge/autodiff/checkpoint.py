"""
Flat binary parameter container.

    header:  b"FRIF" | version u32 | tensor count u64
    tensor:  name length u64 | utf-8 name | rank u64 | dims u64 x rank | float64 payload

All integers and floats are little-endian. A JSON sidecar next to the file
(`<name>.json`) carries optimizer hyperparameters, step counts and anything else
the caller wants to keep with the weights.
"""

from __future__ import annotations

import json
import struct
from collections.abc import Mapping
from pathlib import Path
from typing import Any, BinaryIO

import numpy as np

from ..errors import ConfigError
from ..io.exports import write_json
from ..models import FloatArray

__all__ = ["MAGIC", "VERSION", "save_checkpoint", "load_checkpoint", "sidecar_path"]

MAGIC = b"FRIF"
VERSION = 1

_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")


def sidecar_path(path: Path) -> Path:
    return path.with_suffix(path.suffix + ".json")


def save_checkpoint(
    path: Path,
    tensors: Mapping[str, FloatArray],
    sidecar: Mapping[str, Any] | None = None,
) -> None:
    """Write tensors in insertion order, then the JSON sidecar."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as f:
        f.write(MAGIC)
        f.write(_U32.pack(VERSION))
        f.write(_U64.pack(len(tensors)))
        for name, value in tensors.items():
            arr = np.ascontiguousarray(value, dtype="<f8")
            raw = name.encode("utf-8")
            f.write(_U64.pack(len(raw)))
            f.write(raw)
            f.write(_U64.pack(arr.ndim))
            for d in arr.shape:
                f.write(_U64.pack(d))
            f.write(arr.tobytes())
    write_json(dict(sidecar or {}), sidecar_path(path))


def _read(f: BinaryIO, n: int, path: Path) -> bytes:
    b = f.read(n)
    if len(b) != n:
        raise ConfigError(f"truncated checkpoint {path}")
    return b


def load_checkpoint(path: Path) -> tuple[dict[str, FloatArray], dict[str, Any]]:
    """Inverse of `save_checkpoint`. A missing sidecar yields an empty dict."""
    try:
        f = path.open("rb")
    except OSError as e:
        raise ConfigError(f"cannot open checkpoint {path}: {e}") from e
    tensors: dict[str, FloatArray] = {}
    with f:
        if _read(f, 4, path) != MAGIC:
            raise ConfigError(f"{path} is not a parameter checkpoint (bad magic)")
        (version,) = _U32.unpack(_read(f, 4, path))
        if version != VERSION:
            raise ConfigError(f"unsupported checkpoint version {version} in {path}")
        (count,) = _U64.unpack(_read(f, 8, path))
        for _ in range(count):
            (name_len,) = _U64.unpack(_read(f, 8, path))
            name = _read(f, name_len, path).decode("utf-8")
            (rank,) = _U64.unpack(_read(f, 8, path))
            dims = tuple(_U64.unpack(_read(f, 8, path))[0] for _ in range(rank))
            size = int(np.prod(dims, dtype=np.int64)) if dims else 1
            payload = _read(f, 8 * size, path)
            tensors[name] = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(dims)
        if f.read(1):
            raise ConfigError(f"trailing bytes after {count} tensors in {path}")

    side = sidecar_path(path)
    meta: dict[str, Any] = {}
    if side.exists():
        meta = json.loads(side.read_text(encoding="utf-8"))
    return tensors, meta

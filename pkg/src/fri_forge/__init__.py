# src/fri_forge/__init__.py
from __future__ import annotations

from typing import Any

"""
Keep this init minimal: numpy-heavy modules load on first attribute access.
"""

__all__ = ["build_encoder", "kernel_from_dict", "train", "__version__"]

try:  # pragma: no cover
    from importlib.metadata import version as _pkg_version

    __version__ = _pkg_version("fri-forge")
except Exception:  # pragma: no cover
    __version__ = "0.0.0"


def __getattr__(name: str) -> Any:
    if name == "build_encoder":
        from .encoder import build_encoder

        return build_encoder
    if name == "kernel_from_dict":
        from .kernels import kernel_from_dict

        return kernel_from_dict
    if name == "train":
        from .trainer import train

        return train

    raise AttributeError(name)

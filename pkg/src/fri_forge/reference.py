"""Published reference numbers bundled with the package (data/reference_values.json)."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from typing import Any

from .errors import ConfigError

__all__ = ["load_reference", "reference_columns"]


@lru_cache(maxsize=1)
def _load() -> str:
    return resources.files("fri_forge").joinpath("data/reference_values.json").read_text("utf-8")


def load_reference() -> dict[str, Any]:
    data: dict[str, Any] = json.loads(_load())
    return data


def reference_columns(suite: str) -> dict[float, dict[str, float]]:
    """{snr_db: {column: value}} for one suite (snr_sweep, reduced_samples, model_order)."""
    ref = load_reference()
    if suite not in ref or "columns" not in ref[suite]:
        raise ConfigError(f"no reference table {suite!r}")
    table = ref[suite]
    out: dict[float, dict[str, float]] = {}
    for i, snr in enumerate(table["snr_db"]):
        out[float(snr)] = {name: float(vals[i]) for name, vals in table["columns"].items()}
    return out

from __future__ import annotations

import csv
import json
from collections.abc import Iterable, Iterator, Sequence
from pathlib import Path
from typing import Any

__all__ = ["write_json", "write_csv", "write_ndjson", "read_ndjson"]


def write_json(payload: Any, out_path: Path) -> None:
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w", encoding="utf-8") as f:
        json.dump(payload, f, ensure_ascii=False, indent=2)
        f.write("\n")


def write_csv(
    records: Sequence[dict[str, Any]],
    out_path: Path,
    fieldnames: Sequence[str] | None = None,
) -> None:
    """
    Write rows with a stable header. Without explicit `fieldnames` the header is the
    first record's keys followed by any extra keys, sorted.
    """
    out_path.parent.mkdir(parents=True, exist_ok=True)
    if not records and not fieldnames:
        with out_path.open("w", encoding="utf-8", newline="") as f:
            f.write("")
        return
    if fieldnames is None:
        base_keys = list(records[0].keys())
        dynamic = sorted(set().union(*[set(r.keys()) for r in records]) - set(base_keys))
        header = base_keys + dynamic
    else:
        header = list(fieldnames)
    with out_path.open("w", encoding="utf-8", newline="") as f:
        w = csv.DictWriter(f, fieldnames=header, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in records:
            w.writerow(r)


def write_ndjson(records: Iterable[dict[str, Any]], out_path: Path) -> int:
    """One JSON object per line. Returns the number of records written."""
    out_path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with out_path.open("w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, ensure_ascii=False, separators=(",", ":")))
            f.write("\n")
            n += 1
    return n


def read_ndjson(in_path: Path) -> Iterator[dict[str, Any]]:
    with in_path.open("r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                yield json.loads(line)

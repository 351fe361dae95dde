import json
from pathlib import Path

from fri_forge.io.exports import read_ndjson, write_csv, write_json, write_ndjson


def test_write_json_and_csv(tmp_path: Path) -> None:
    records = [
        {"snr_db": 5.0, "delta_tau": "", "target": "delays", "nmse_db": -22.6, "trials": 1000},
        {"snr_db": 15.0, "delta_tau": "", "target": "delays", "nmse_db": -33.6, "extra": 1},
    ]
    write_json(records, tmp_path / "out.json")
    write_csv(records, tmp_path / "out.csv")
    assert json.loads((tmp_path / "out.json").read_text(encoding="utf-8")) == records
    lines = (tmp_path / "out.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "snr_db,delta_tau,target,nmse_db,trials,extra"
    assert len(lines) == 3


def test_csv_with_fixed_header(tmp_path: Path) -> None:
    write_csv([{"t": 0.0, "g": 1.0, "ignored": 2}], tmp_path / "k.csv", fieldnames=["t", "g"])
    assert (tmp_path / "k.csv").read_text(encoding="utf-8") == "t,g\n0.0,1.0\n"
    write_csv([], tmp_path / "empty.csv")
    assert (tmp_path / "empty.csv").read_text(encoding="utf-8") == ""


def test_ndjson(tmp_path: Path) -> None:
    rows = [{"a": [1.0, 2.0], "tau": [0.1, 0.2]}, {"a": [3.0], "tau": [0.0]}]
    assert write_ndjson(iter(rows), tmp_path / "d" / "x.ndjson") == 2
    assert list(read_ndjson(tmp_path / "d" / "x.ndjson")) == rows

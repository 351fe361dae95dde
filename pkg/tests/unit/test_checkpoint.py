# tests/unit/test_checkpoint.py
import json
from pathlib import Path

import numpy as np
import pytest

from fri_forge.autodiff import load_checkpoint, save_checkpoint
from fri_forge.autodiff.checkpoint import MAGIC, sidecar_path
from fri_forge.errors import ConfigError


def test_save_and_load(tmp_path: Path) -> None:
    tensors = {
        "conv0.weight": np.arange(24.0).reshape(2, 3, 4),
        "bias": np.array([0.5, -1.5]),
        "scalar": np.array(3.25),
    }
    path = tmp_path / "model.bin"
    save_checkpoint(path, tensors, {"lr": 1e-3, "steps": 7})
    loaded, meta = load_checkpoint(path)
    assert list(loaded) == list(tensors)
    for name, value in tensors.items():
        assert loaded[name].shape == value.shape
        assert np.array_equal(loaded[name], value)
    assert meta == {"lr": 1e-3, "steps": 7}
    assert path.read_bytes()[:4] == MAGIC
    assert json.loads(sidecar_path(path).read_text(encoding="utf-8"))["steps"] == 7


def test_bad_files(tmp_path: Path) -> None:
    path = tmp_path / "model.bin"
    save_checkpoint(path, {"w": np.ones((3, 3))})
    raw = path.read_bytes()

    truncated = tmp_path / "truncated.bin"
    truncated.write_bytes(raw[:-5])
    with pytest.raises(ConfigError):
        load_checkpoint(truncated)

    wrong = tmp_path / "wrong.bin"
    wrong.write_bytes(b"NOPE" + raw[4:])
    with pytest.raises(ConfigError):
        load_checkpoint(wrong)

    trailing = tmp_path / "trailing.bin"
    trailing.write_bytes(raw + b"\x00")
    with pytest.raises(ConfigError):
        load_checkpoint(trailing)

    with pytest.raises(ConfigError):
        load_checkpoint(tmp_path / "missing.bin")

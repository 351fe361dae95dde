# tests/unit/test_harness.py
import csv
from pathlib import Path

import numpy as np
import pytest

from fri_forge.config import write_resolved_config
from fri_forge.encoder import EncoderConfig, build_encoder
from fri_forge.errors import ConfigError
from fri_forge.harness import (
    CSV_FIELDS,
    ModelBundle,
    NmseCell,
    evaluate_cell,
    kernel_series,
    load_bundle,
    plotdata,
    reference_table,
    run_model_order_sweep,
    run_resolution_sweep,
    run_snr_sweep,
    write_table,
)
from fri_forge.kernels import GaussianPairKernel, TruncatedGaussianKernel
from fri_forge.models import Dirac, GenerationRanges, KernelSupport
from fri_forge.sampler import SnrPolicy, build_grid
from fri_forge.trainer import BatchStream, TrainConfig, train

GRID = build_grid(KernelSupport(-0.3, 0.3), -0.48, 0.52, 21)


def _bundle(model_id: str = "m", order: int = 2) -> ModelBundle:
    enc = build_encoder(
        EncoderConfig(21, order, conv_channels=(4,), hidden=(8,), param_target=None, seed=2)
    )
    return ModelBundle(
        enc, GaussianPairKernel(), Dirac(), GRID, GenerationRanges.default(order), model_id
    )


def test_bundle_shape_check() -> None:
    enc = build_encoder(EncoderConfig(11, 2, conv_channels=(4,), hidden=(8,), param_target=None))
    with pytest.raises(ConfigError):
        ModelBundle(enc, GaussianPairKernel(), Dirac(), GRID, GenerationRanges.default())


def test_cells_are_deterministic() -> None:
    b = _bundle()
    first = evaluate_cell(b, 15.0, 40, seed=1, index=3)
    second = evaluate_cell(b, 15.0, 40, seed=1, index=3)
    assert first == second
    assert first[0].target == "delays" and first[0].trials == 40
    other = evaluate_cell(b, 15.0, 40, seed=1, index=4)
    assert other[0].nmse_db != first[0].nmse_db
    with pytest.raises(ConfigError):
        evaluate_cell(b, 15.0, 0, seed=1, index=0)


def test_snr_sweep_with_amplitudes() -> None:
    b = _bundle()
    head = b.encoder.dense[-1]
    head.weight.value = np.zeros_like(head.weight.value)
    head.bias.value = np.array([0.0, 0.3])
    cells = run_snr_sweep(b, [5.0, 40.0], trials=20, amplitude_method="ls")
    assert [(c.snr_db, c.target) for c in cells] == [
        (5.0, "delays"),
        (5.0, "amplitudes"),
        (40.0, "delays"),
        (40.0, "amplitudes"),
    ]
    assert all(np.isfinite(c.nmse_db) for c in cells)


def test_parallel_sweep_matches_serial() -> None:
    b = _bundle()
    serial = run_snr_sweep(b, [5.0, 15.0, 25.0], trials=20, seed=4, threads=1)
    parallel = run_snr_sweep(b, [5.0, 15.0, 25.0], trials=20, seed=4, threads=2)
    assert serial == parallel


def test_resolution_and_model_order_sweeps() -> None:
    cells = run_resolution_sweep(_bundle(), [0.05, 0.1], [10.0, 40.0], trials=10)
    assert [(c.delta_tau, c.snr_db) for c in cells] == [
        (0.05, 10.0),
        (0.05, 40.0),
        (0.1, 10.0),
        (0.1, 40.0),
    ]
    bundles = [_bundle("L2"), _bundle("L3", order=3)]
    by_order = run_model_order_sweep(bundles, [10.0], trials=10)
    assert [c.model_id for c in by_order] == ["L2", "L3"]


def test_reference_table_and_plotdata() -> None:
    cells = [
        NmseCell(40.0, None, "delays", -50.0, 10, "ours"),
        NmseCell(5.0, None, "delays", -20.0, 10, "ours"),
        NmseCell(5.0, None, "amplitudes", -10.0, 10, "ours"),
        NmseCell(5.0, 0.05, "delays", -18.0, 10, "ours"),
    ]
    rows = reference_table(cells, {5.0: {"gaussian": -22.6}})
    assert rows == [
        {"snr_db": 5.0, "ours": -20.0, "ref_gaussian": -22.6},
        {"snr_db": 40.0, "ours": -50.0},
    ]

    series = {s["name"]: s for s in plotdata(cells)}
    assert series["ours:delays"]["x"] == [5.0, 40.0]
    assert series["ours:delays"]["y"] == [-20.0, -50.0]
    assert "ours:amplitudes" in series
    by_gap = plotdata(cells, x="delta_tau")
    assert [s["name"] for s in by_gap] == ["ours:delays:snr=5"]

    shapes = kernel_series({"pair": GaussianPairKernel()}, points=11)
    assert len(shapes[0]["x"]) == 11


def test_write_table(tmp_path: Path) -> None:
    cells = [NmseCell(5.0, None, "delays", -20.1234567, 10, "ours")]
    csv_path, json_path = write_table(cells, tmp_path, "snr_sweep")
    with csv_path.open(encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    assert list(rows[0]) == CSV_FIELDS
    assert rows[0]["delta_tau"] == "" and float(rows[0]["nmse_db"]) == -20.123457
    assert json_path.exists()


def test_load_bundle_from_run_directory(tmp_path: Path) -> None:
    ranges = GenerationRanges.default()
    stream = BatchStream(ranges, GRID, SnrPolicy.parse("5:40"))
    cfg = TrainConfig(
        mode="encoder-only", epochs=1, batch_size=8, examples_per_epoch=8, validation_count=8
    )
    enc = build_encoder(EncoderConfig(21, 2, conv_channels=(4,), hidden=(8,), param_target=None))
    kernel = TruncatedGaussianKernel()
    train(cfg, kernel, enc, stream, tmp_path)
    write_resolved_config(
        tmp_path,
        {"model_id": "tg", "ranges": ranges.to_dict(), "grid": GRID.to_dict(), "pulse": "dirac"},
    )

    bundle = load_bundle(tmp_path)
    assert bundle.model_id == "tg"
    assert bundle.grid == GRID and bundle.ranges == ranges
    assert isinstance(bundle.kernel, TruncatedGaussianKernel)
    assert load_bundle(tmp_path, "renamed").model_id == "renamed"

    write_resolved_config(tmp_path, {"model_id": "tg"})
    with pytest.raises(ConfigError):
        load_bundle(tmp_path)
